//! Run configuration and the flat `key = value` config file format.
//!
//! Every tunable constant of the pipeline is a key, so ablations (alignment,
//! pyramid level, temporal filter, RoI cropping) run without code changes:
//!
//! ```text
//! # comment
//! pyramid_level = 3
//! k = 6
//! filter_kind = bandpass
//! use_roi = false
//! ```

use std::path::Path;

use crate::eval::MatchStrategy;
use crate::train::TrainConfig;
use crate::{Error, Result};

/// Temporal filter applied to the phase-difference sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    Lowpass,
    /// Passband `[low_hz, cutoff_hz]`.
    Bandpass { low_hz: f64 },
}

/// Scope of the Z-score statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    PerVideo,
    PerFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// 1-based Laplacian level whose phase is used.
    pub pyramid_level: usize,
    /// Accumulation span in frames, half the mean micro-expression length.
    pub k: usize,
    pub cutoff_hz: f64,
    pub filter_kind: FilterKind,
    /// Peak threshold fraction between mean and max smoothed score.
    pub h: f64,
    /// Minimum spacing of detected peaks; `None` means `k`.
    pub min_peak_distance: Option<usize>,
    pub use_alignment: bool,
    pub use_roi: bool,
    /// Fractional margin added on each side of the landmark box before cropping.
    pub crop_margin: f64,
    /// Fractional margin added on each side of the RoI landmark boxes.
    pub roi_margin: f64,
    /// Pixels with amplitude at or below this fraction of the level maximum
    /// carry no phase.
    pub amplitude_floor: f64,
    pub normalization: Normalization,
    /// Smooth only frames with a full `2K + 1` window, as in the original formulation.
    pub strict_smoothing: bool,
    /// Require IoU strictly above the match threshold instead of `>=`.
    pub strict_iou: bool,
    pub matching: MatchStrategy,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pyramid_level: 3,
            k: 6,
            cutoff_hz: 10.0,
            filter_kind: FilterKind::Lowpass,
            h: 0.7,
            min_peak_distance: None,
            use_alignment: true,
            use_roi: true,
            crop_margin: 0.10,
            roi_margin: 0.15,
            amplitude_floor: 1e-6,
            normalization: Normalization::PerVideo,
            strict_smoothing: false,
            strict_iou: false,
            matching: MatchStrategy::Optimal,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn min_peak_distance(&self) -> usize {
        self.min_peak_distance.unwrap_or(self.k).max(1)
    }

    /// `K` as half the mean annotated length, rounded, at least 1.
    pub fn k_from_lengths(lengths: impl IntoIterator<Item = usize>) -> Option<usize> {
        let (sum, n) = lengths
            .into_iter()
            .fold((0usize, 0usize), |(s, n), l| (s + l, n + 1));
        (n > 0).then(|| ((sum as f64 / n as f64) / 2.0).round().max(1.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.pyramid_level < 1 {
            return bad("pyramid_level must be >= 1");
        }
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if !(self.cutoff_hz > 0.0) {
            return bad("cutoff_hz must be positive");
        }
        if let FilterKind::Bandpass { low_hz } = self.filter_kind {
            if !(low_hz > 0.0 && low_hz < self.cutoff_hz) {
                return bad("bandpass_low_hz must lie in (0, cutoff_hz)");
            }
        }
        if !(0.0..=1.0).contains(&self.h) {
            return bad("h must lie in [0, 1]");
        }
        if self.min_peak_distance == Some(0) {
            return bad("min_peak_distance must be >= 1");
        }
        if !(self.crop_margin >= 0.0 && self.roi_margin >= 0.0) {
            return bad("margins must be non-negative");
        }
        if !(self.amplitude_floor >= 0.0) {
            return bad("amplitude_floor must be non-negative");
        }
        Ok(())
    }

    /// Applies one `key = value` setting. Returns `Ok(false)` for keys this
    /// struct does not own.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "pyramid_level" | "level" => self.pyramid_level = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "cutoff_hz" => self.cutoff_hz = parse(key, value)?,
            "filter_kind" => {
                self.filter_kind = match value {
                    "lowpass" => FilterKind::Lowpass,
                    "bandpass" => FilterKind::Bandpass { low_hz: 2.0 },
                    _ => return Err(bad_value(key, value)),
                }
            }
            "bandpass_low_hz" => {
                self.filter_kind = FilterKind::Bandpass {
                    low_hz: parse(key, value)?,
                }
            }
            "h" => self.h = parse(key, value)?,
            "min_peak_distance" => self.min_peak_distance = Some(parse(key, value)?),
            "use_alignment" => self.use_alignment = parse_bool(key, value)?,
            "use_roi" => self.use_roi = parse_bool(key, value)?,
            "crop_margin" => self.crop_margin = parse(key, value)?,
            "roi_margin" => self.roi_margin = parse(key, value)?,
            "amplitude_floor" => self.amplitude_floor = parse(key, value)?,
            "normalization" => {
                self.normalization = match value {
                    "per_video" => Normalization::PerVideo,
                    "per_frame" => Normalization::PerFrame,
                    _ => return Err(bad_value(key, value)),
                }
            }
            "strict_smoothing" => self.strict_smoothing = parse_bool(key, value)?,
            "strict_iou" => self.strict_iou = parse_bool(key, value)?,
            "matching" => {
                self.matching = match value {
                    "optimal" => MatchStrategy::Optimal,
                    "greedy" => MatchStrategy::Greedy,
                    _ => return Err(bad_value(key, value)),
                }
            }
            "seed" => self.seed = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Run and training configuration loaded together from one file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub run: RunConfig,
    pub train: TrainConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                file: origin.to_string(),
                row: n + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                file: origin.to_string(),
                row: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Applies a single override such as `k=47`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.run.apply(key, value)? || self.train.apply(key, value)? {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown key {key:?}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        self.train.validate()
    }
}

pub(crate) fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad_value(key, value))
}

pub(crate) fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(bad_value(key, value)),
    }
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for {key}"))
}
