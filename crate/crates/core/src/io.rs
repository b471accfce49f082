//! Frame directories, annotation and landmark tables, and score/interval outputs.
//!
//! File formats:
//!
//! - frames: `<dir>/<zero-padded index>.png`, 8-bit gray or color
//! - annotations: `video_id,subject_id,onset,apex,offset` (apex may be empty)
//! - landmarks: `frame,x0,y0,...,x67,y67`
//! - scores: `frame,score,smoothed_score`
//! - intervals: `video_id,onset,offset,peak`

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::postprocess::SpottedInterval;
use crate::{Error, Plane, Point2, Result, NUM_LANDMARKS};

#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub video_id: String,
    pub subject_id: String,
    pub fps: f64,
    frames: Vec<Plane>,
}

impl FrameSequence {
    /// Checks `fps > 0`, at least two frames and a common resolution.
    pub fn new(
        video_id: impl Into<String>,
        subject_id: impl Into<String>,
        fps: f64,
        frames: Vec<Plane>,
    ) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidSequence(format!("fps must be positive, got {fps}")));
        }
        if frames.len() < 2 {
            return Err(Error::InvalidSequence(format!(
                "need at least 2 frames, got {}",
                frames.len()
            )));
        }
        let dims = frames[0].dims();
        if let Some(i) = frames.iter().position(|f| f.dims() != dims) {
            return Err(Error::InvalidSequence(format!(
                "frame {i} is {:?}, expected {dims:?}",
                frames[i].dims()
            )));
        }
        Ok(Self {
            video_id: video_id.into(),
            subject_id: subject_id.into(),
            fps,
            frames,
        })
    }

    pub fn frames(&self) -> &[Plane] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(width, height)` shared by all frames.
    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn decode_gray(path: &Path) -> Result<Plane> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb32f();
    let (w, h) = rgb.dimensions();
    let data = rgb
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).clamp(0.0, 1.0)
        })
        .collect();
    Ok(Plane::from_vec(w as usize, h as usize, data))
}

/// Loads every `.png` in `dir`, in lexicographic file-name order, as grayscale
/// in `[0, 1]`. The directory name becomes the video id.
pub fn load_frame_sequence(dir: &Path, fps: f64) -> Result<FrameSequence> {
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(files.len());
    for path in &files {
        let frame = decode_gray(path)?;
        if let Some(first) = frames.first().map(Plane::dims) {
            if frame.dims() != first {
                return Err(Error::ResolutionMismatch {
                    path: path.clone(),
                    expected: first,
                    found: frame.dims(),
                });
            }
        }
        frames.push(frame);
    }
    let video_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    FrameSequence::new(video_id, "", fps, frames)
}

/// Writes frames as 8-bit grayscale `000000.png`, `000001.png`, ...
pub fn save_frame_sequence(dir: &Path, seq: &FrameSequence) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in seq.frames().iter().enumerate() {
        let path = dir.join(format!("{i:06}.png"));
        let bytes: Vec<u8> = frame
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let img = image::GrayImage::from_raw(frame.width() as u32, frame.height() as u32, bytes)
            .expect("buffer matches dimensions");
        img.save(&path).map_err(|e| Error::Decode {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

/// Ground-truth micro-expression interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MEAnnotation {
    pub video_id: String,
    pub subject_id: String,
    pub onset: usize,
    pub apex: Option<usize>,
    pub offset: usize,
}

impl MEAnnotation {
    pub fn length(&self) -> usize {
        self.offset - self.onset
    }

    /// Checks the indices against a video of `t` frames.
    pub fn check_bounds(&self, t: usize) -> Result<()> {
        if self.offset >= t {
            return Err(Error::InvalidSequence(format!(
                "annotation [{}, {}] of {} exceeds video length {t}",
                self.onset, self.offset, self.video_id
            )));
        }
        Ok(())
    }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(
    origin: &str,
    row: usize,
    name: &str,
    text: &str,
) -> Result<T> {
    text.parse().map_err(|_| Error::Parse {
        file: origin.to_string(),
        row,
        message: format!("invalid {name} {text:?}"),
    })
}

pub fn parse_annotations(path: &Path) -> Result<Vec<MEAnnotation>> {
    read_annotations(open(path)?, &path.display().to_string())
}

/// Parses the annotation CSV. Row numbers in errors count data rows from 1.
pub fn read_annotations<R: Read>(reader: R, origin: &str) -> Result<Vec<MEAnnotation>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(reader).records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            file: origin.to_string(),
            row,
            message: e.to_string(),
        })?;
        if rec.len() != 5 {
            return Err(Error::Parse {
                file: origin.to_string(),
                row,
                message: format!("expected 5 columns, found {}", rec.len()),
            });
        }
        let onset: usize = parse_field(origin, row, "onset", &rec[2])?;
        let apex = match &rec[3] {
            "" => None,
            s => Some(parse_field(origin, row, "apex", s)?),
        };
        let offset: usize = parse_field(origin, row, "offset", &rec[4])?;
        if onset >= offset {
            return Err(Error::Parse {
                file: origin.to_string(),
                row,
                message: format!("onset {onset} must precede offset {offset}"),
            });
        }
        if let Some(a) = apex {
            if a < onset || a > offset {
                return Err(Error::Parse {
                    file: origin.to_string(),
                    row,
                    message: format!("apex {a} outside [{onset}, {offset}]"),
                });
            }
        }
        out.push(MEAnnotation {
            video_id: rec[0].to_string(),
            subject_id: rec[1].to_string(),
            onset,
            apex,
            offset,
        });
    }
    Ok(out)
}

pub fn write_annotations(path: &Path, annotations: &[MEAnnotation]) -> Result<()> {
    let mut w = create(path)?;
    write_annotations_to(&mut w, annotations).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_annotations_to<W: Write>(w: &mut W, annotations: &[MEAnnotation]) -> std::io::Result<()> {
    writeln!(w, "video_id,subject_id,onset,apex,offset")?;
    for a in annotations {
        let apex = a.apex.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", a.video_id, a.subject_id, a.onset, apex, a.offset)?;
    }
    Ok(())
}

/// One set of 68 landmarks.
pub type Landmarks = [Point2; NUM_LANDMARKS];

/// Per-frame landmark positions.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrack {
    /// Frame index of each entry, strictly increasing.
    pub frames: Vec<usize>,
    pub points: Vec<Landmarks>,
}

impl LandmarkTrack {
    /// Track with consecutive frame indices starting at 0.
    pub fn from_points(points: Vec<Landmarks>) -> Self {
        Self {
            frames: (0..points.len()).collect(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn parse_landmarks(path: &Path) -> Result<LandmarkTrack> {
    read_landmarks(open(path)?, &path.display().to_string())
}

pub fn read_landmarks<R: Read>(reader: R, origin: &str) -> Result<LandmarkTrack> {
    let expected = 1 + 2 * NUM_LANDMARKS;
    let mut track = LandmarkTrack {
        frames: Vec::new(),
        points: Vec::new(),
    };
    for (i, rec) in csv_reader(reader).records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            file: origin.to_string(),
            row,
            message: e.to_string(),
        })?;
        if rec.len() != expected {
            return Err(Error::Parse {
                file: origin.to_string(),
                row,
                message: format!("expected {expected} columns, found {}", rec.len()),
            });
        }
        let frame: usize = parse_field(origin, row, "frame", &rec[0])?;
        if let Some(&prev) = track.frames.last() {
            if frame <= prev {
                return Err(Error::Parse {
                    file: origin.to_string(),
                    row,
                    message: format!("frame index {frame} not greater than previous {prev}"),
                });
            }
        }
        let mut pts = [Point2::default(); NUM_LANDMARKS];
        for (k, p) in pts.iter_mut().enumerate() {
            let x: f64 = parse_field(origin, row, "coordinate", &rec[1 + 2 * k])?;
            let y: f64 = parse_field(origin, row, "coordinate", &rec[2 + 2 * k])?;
            if !(x.is_finite() && y.is_finite()) {
                return Err(Error::Parse {
                    file: origin.to_string(),
                    row,
                    message: format!("non-finite coordinate for landmark {k}"),
                });
            }
            *p = Point2::new(x, y);
        }
        track.frames.push(frame);
        track.points.push(pts);
    }
    Ok(track)
}

pub fn write_landmarks(path: &Path, track: &LandmarkTrack) -> Result<()> {
    let mut w = create(path)?;
    write_landmarks_to(&mut w, track).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_landmarks_to<W: Write>(w: &mut W, track: &LandmarkTrack) -> std::io::Result<()> {
    write!(w, "frame")?;
    for k in 0..NUM_LANDMARKS {
        write!(w, ",x{k},y{k}")?;
    }
    writeln!(w)?;
    for (frame, pts) in track.frames.iter().zip(&track.points) {
        write!(w, "{frame}")?;
        for p in pts {
            write!(w, ",{},{}", p.x, p.y)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes `frame,score,smoothed_score`; row `j` is frame `first_frame + j`.
pub fn write_scores(path: &Path, first_frame: usize, scores: &[f64], smoothed: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "frame,score,smoothed_score")?;
        for (j, (s, sm)) in scores.iter().zip(smoothed).enumerate() {
            writeln!(w, "{},{},{}", first_frame + j, s, sm)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Spotted intervals keyed by video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoIntervals {
    pub video_id: String,
    pub interval: SpottedInterval,
}

pub fn write_intervals(path: &Path, rows: &[VideoIntervals]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "video_id,onset,offset,peak")?;
        for r in rows {
            let i = &r.interval;
            writeln!(w, "{},{},{},{}", r.video_id, i.onset, i.offset, i.peak)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn parse_intervals(path: &Path) -> Result<Vec<VideoIntervals>> {
    let origin = path.display().to_string();
    let mut out = Vec::new();
    for (i, rec) in csv_reader(open(path)?).records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            file: origin.clone(),
            row,
            message: e.to_string(),
        })?;
        if rec.len() != 4 {
            return Err(Error::Parse {
                file: origin.clone(),
                row,
                message: format!("expected 4 columns, found {}", rec.len()),
            });
        }
        let onset = parse_field(&origin, row, "onset", &rec[1])?;
        let offset = parse_field(&origin, row, "offset", &rec[2])?;
        let peak = parse_field(&origin, row, "peak", &rec[3])?;
        out.push(VideoIntervals {
            video_id: rec[0].to_string(),
            interval: SpottedInterval { onset, offset, peak },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn annotation_row_maps_fields() {
        let csv = "video_id,subject_id,onset,apex,offset\nv01,s15,957,973,989\n";
        let a = read_annotations(csv.as_bytes(), "mem").unwrap();
        assert_eq!(
            a,
            vec![MEAnnotation {
                video_id: "v01".into(),
                subject_id: "s15".into(),
                onset: 957,
                apex: Some(973),
                offset: 989,
            }]
        );
    }

    #[test]
    fn annotation_with_offset_before_onset_names_row() {
        let csv = "video_id,subject_id,onset,apex,offset\nv01,s1,1,,5\nv01,s1,40,,30\n";
        let err = read_annotations(csv.as_bytes(), "ann.csv").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn empty_annotation_file_is_empty_list() {
        assert!(read_annotations("".as_bytes(), "e").unwrap().is_empty());
        let header_only = "video_id,subject_id,onset,apex,offset\n";
        assert!(read_annotations(header_only.as_bytes(), "e").unwrap().is_empty());
    }

    #[test]
    fn empty_apex_is_none() {
        let csv = "video_id,subject_id,onset,apex,offset\nv,s,3,,9\n";
        assert_eq!(read_annotations(csv.as_bytes(), "m").unwrap()[0].apex, None);
    }

    fn landmark_csv(rows: &[(usize, usize)]) -> String {
        // (frame index, coordinate column count)
        let mut s = String::from("frame");
        for k in 0..NUM_LANDMARKS {
            s += &format!(",x{k},y{k}");
        }
        s.push('\n');
        for &(f, cols) in rows {
            s += &f.to_string();
            for c in 0..cols {
                s += &format!(",{}.5", c);
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn landmark_track_length_matches_rows() {
        let rows: Vec<_> = (0..10).map(|f| (f, 136)).collect();
        let t = read_landmarks(landmark_csv(&rows).as_bytes(), "lm").unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t.points[3][1], Point2::new(2.5, 3.5));
    }

    #[test]
    fn landmark_row_with_missing_column_fails() {
        let s = landmark_csv(&[(0, 136), (1, 135)]);
        assert!(matches!(read_landmarks(s.as_bytes(), "lm"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn duplicate_landmark_frame_fails() {
        let s = landmark_csv(&[(0, 136), (1, 136), (1, 136)]);
        assert!(matches!(read_landmarks(s.as_bytes(), "lm"), Err(Error::Parse { row: 3, .. })));
    }

    #[test]
    fn frame_directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        let seq = FrameSequence::new(
            "v",
            "s",
            30.0,
            (0..3).map(|i| Plane::filled(8, 6, i as f64 / 4.0)).collect(),
        )
        .unwrap();
        save_frame_sequence(dir.path(), &seq).unwrap();
        let back = load_frame_sequence(dir.path(), 30.0).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.dims(), (8, 6));
        assert!((back.frames()[2].get(3, 3) - 0.5).abs() < 1.0 / 255.0);

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_frame_sequence(empty.path(), 30.0),
            Err(Error::NoFrames(_))
        ));

        image::GrayImage::new(4, 4)
            .save(dir.path().join("000003.png"))
            .unwrap();
        assert!(matches!(
            load_frame_sequence(dir.path(), 30.0),
            Err(Error::ResolutionMismatch { .. })
        ));

        std::fs::write(dir.path().join("000003.png"), b"not a png").unwrap();
        assert!(matches!(
            load_frame_sequence(dir.path(), 30.0),
            Err(Error::Decode { .. })
        ));
    }

    #[test]
    fn color_frames_use_luma_weights() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..2 {
            image::RgbImage::from_pixel(2, 2, image::Rgb([255, 0, 0]))
                .save(dir.path().join(format!("{i:03}.png")))
                .unwrap();
        }
        let seq = load_frame_sequence(dir.path(), 25.0).unwrap();
        assert!((seq.frames()[0].get(0, 0) - 0.299).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn annotations_round_trip(rows in prop::collection::vec((0usize..5000, 1usize..200, prop::option::of(0usize..200)), 0..20)) {
            let anns: Vec<_> = rows.iter().enumerate().map(|(i, &(on, len, apex))| MEAnnotation {
                video_id: format!("v{i}"),
                subject_id: format!("s{}", i % 3),
                onset: on,
                apex: apex.map(|a| on + a.min(len)),
                offset: on + len,
            }).collect();
            let mut buf = Vec::new();
            write_annotations_to(&mut buf, &anns).unwrap();
            prop_assert_eq!(read_annotations(buf.as_slice(), "rt").unwrap(), anns);
        }

        #[test]
        fn landmarks_round_trip(seed in prop::collection::vec(-1e4f64..1e4, 2 * NUM_LANDMARKS), n in 1usize..4) {
            let pts: Landmarks = std::array::from_fn(|k| Point2::new(seed[2 * k], seed[2 * k + 1]));
            let track = LandmarkTrack::from_points(vec![pts; n]);
            let mut buf = Vec::new();
            write_landmarks_to(&mut buf, &track).unwrap();
            let back = read_landmarks(buf.as_slice(), "rt").unwrap();
            prop_assert_eq!(&back.frames, &track.frames);
            for (a, b) in back.points.iter().flatten().zip(track.points.iter().flatten()) {
                prop_assert!((a.x - b.x).abs() <= 1e-6 && (a.y - b.y).abs() <= 1e-6);
            }
        }
    }
}
