use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no frames in {0}")]
    NoFrames(PathBuf),

    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("resolution mismatch: {path} is {found:?}, expected {expected:?}")]
    ResolutionMismatch {
        path: PathBuf,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{file}, row {row}: {message}")]
    Parse {
        file: String,
        row: usize,
        message: String,
    },

    #[error("invalid frame sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate point set: {0}")]
    DegenerateLandmarks(String),

    #[error("degenerate RoI: {0}")]
    DegenerateRoi(String),

    #[error("RoI outside level bounds: {0}")]
    RoiOutOfBounds(String),

    #[error("pyramid level {levels} too deep for a {width}x{height} image")]
    PyramidTooDeep {
        levels: usize,
        width: usize,
        height: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("temporal filter: {0}")]
    Filter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("degenerate interval [{onset}, {offset}]")]
    DegenerateInterval { onset: f64, offset: f64 },

    #[error("need at least two subjects for leave-one-subject-out, found {0}")]
    TooFewSubjects(usize),

    #[error("bad weights file: {0}")]
    BadWeights(String),

    #[error("bad raster dump: {0}")]
    BadRaster(String),

    #[error("synthetic spec: {0}")]
    Synth(String),

    #[error("training: {0}")]
    Train(String),

    #[error("video ids without annotations: {}", .0.join(", "))]
    UnmatchedVideos(Vec<String>),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
