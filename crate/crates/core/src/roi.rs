//! Eyebrow/mouth regions of interest and the 30×30×3 CNN input.

use std::ops::Range;

use crate::phase::AccumulatedMotion;
use crate::{Error, Plane, Point2, Result, FACE_SIZE};

/// Brow landmarks in the 68-point scheme.
pub const BROWS: Range<usize> = 17..27;
/// Outer and inner lip landmarks.
pub const MOUTH: Range<usize> = 48..68;

pub const FEATURE_SIZE: usize = 30;
pub const FEATURE_CHANNELS: usize = 3;
pub const STRIP_ROWS: usize = FEATURE_SIZE / 2;

/// Rectangle `[x0, x1) × [y0, y1)` in face-crop pixel-edge coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    fn scaled(&self, s: f64) -> Rect {
        Rect {
            x0: self.x0 * s,
            y0: self.y0 * s,
            x1: self.x1 * s,
            y1: self.y1 * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiBoxes {
    pub eyebrow: Rect,
    pub mouth: Rect,
}

fn grown_box(points: &[Point2], margin: f64, bound: f64, name: &str) -> Result<Rect> {
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (w, h) = (x1 - x0, y1 - y0);
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::DegenerateRoi(format!("{name} landmarks span zero area")));
    }
    let r = Rect {
        x0: (x0 - margin * w).clamp(0.0, bound),
        y0: (y0 - margin * h).clamp(0.0, bound),
        x1: (x1 + margin * w).clamp(0.0, bound),
        y1: (y1 + margin * h).clamp(0.0, bound),
    };
    if !(r.width() > 0.0 && r.height() > 0.0) {
        return Err(Error::DegenerateRoi(format!("{name} box lies outside the face crop")));
    }
    Ok(r)
}

/// Boxes around the brow and mouth landmarks, each side grown by `margin`
/// of the box size and clamped to the face crop.
pub fn roi_boxes_from_landmarks(landmarks: &[Point2], margin: f64) -> Result<RoiBoxes> {
    if landmarks.len() < MOUTH.end {
        return Err(Error::DegenerateRoi(format!(
            "need 68 landmarks, got {}",
            landmarks.len()
        )));
    }
    let bound = FACE_SIZE as f64;
    Ok(RoiBoxes {
        eyebrow: grown_box(&landmarks[BROWS], margin, bound, "eyebrow")?,
        mouth: grown_box(&landmarks[MOUTH], margin, bound, "mouth")?,
    })
}

/// Channel-major `3 × 30 × 30` tensor: `(ΔΦcosΘ, ΔΦsinΘ, |ΔΦ|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    data: Vec<f64>,
}

impl Default for FeatureMap {
    fn default() -> Self {
        Self::zeros()
    }
}

impl FeatureMap {
    pub const LEN: usize = FEATURE_CHANNELS * FEATURE_SIZE * FEATURE_SIZE;
    pub const PLANE: usize = FEATURE_SIZE * FEATURE_SIZE;

    pub fn zeros() -> Self {
        Self {
            data: vec![0.0; Self::LEN],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if data.len() != Self::LEN {
            return Err(Error::ShapeMismatch(format!(
                "feature map needs {} values, got {}",
                Self::LEN,
                data.len()
            )));
        }
        Ok(Self { data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (FEATURE_SIZE, FEATURE_SIZE, FEATURE_CHANNELS)
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[channel * Self::PLANE + row * FEATURE_SIZE + col]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * Self::PLANE..(c + 1) * Self::PLANE]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * Self::PLANE..(c + 1) * Self::PLANE]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Left-right flip. Horizontal motion `U` changes sign.
    pub fn mirrored(&self) -> FeatureMap {
        let mut out = Self::zeros();
        for c in 0..FEATURE_CHANNELS {
            let sign = if c == 0 { -1.0 } else { 1.0 };
            let src = self.channel(c);
            for (dst, row) in out.channel_mut(c).chunks_exact_mut(FEATURE_SIZE).zip(src.chunks_exact(FEATURE_SIZE)) {
                for (d, s) in dst.iter_mut().zip(row.iter().rev()) {
                    *d = sign * s;
                }
            }
        }
        out
    }
}

fn level_scale(level: usize) -> f64 {
    1.0 / (1u64 << (level - 1)) as f64
}

fn check_inside(r: &Rect, w: usize, h: usize, name: &str) -> Result<()> {
    // Half a level pixel of slack absorbs rounding from the ceil-halving.
    let tol = 0.5;
    if r.x0 < -tol || r.y0 < -tol || r.x1 > w as f64 + tol || r.y1 > h as f64 + tol {
        return Err(Error::RoiOutOfBounds(format!(
            "{name} box {r:?} vs level extent {w}x{h}"
        )));
    }
    Ok(())
}

/// Crops the RoIs from a level-`level` motion map into an unnormalized
/// feature map: eyebrow strip (15×30) above mouth strip (15×30).
/// With `boxes = None` the whole map is resampled to 30×30 instead.
pub fn extract_features(
    motion: &AccumulatedMotion,
    level: usize,
    boxes: Option<&RoiBoxes>,
) -> Result<FeatureMap> {
    if level == 0 {
        return Err(Error::Config("pyramid level is 1-based".into()));
    }
    let (w, h) = motion.dims();
    let mut out = FeatureMap::zeros();
    let planes = motion.channels().map(|c| Plane::from_vec(w, h, c.to_vec()));
    match boxes {
        Some(b) => {
            let s = level_scale(level);
            let brow = b.eyebrow.scaled(s);
            let mouth = b.mouth.scaled(s);
            check_inside(&brow, w, h, "eyebrow")?;
            check_inside(&mouth, w, h, "mouth")?;
            for (c, plane) in planes.iter().enumerate() {
                let dst = out.channel_mut(c);
                let top = plane.resample_region((brow.x0, brow.y0, brow.x1, brow.y1), FEATURE_SIZE, STRIP_ROWS);
                let bottom =
                    plane.resample_region((mouth.x0, mouth.y0, mouth.x1, mouth.y1), FEATURE_SIZE, STRIP_ROWS);
                let half = STRIP_ROWS * FEATURE_SIZE;
                dst[..half].copy_from_slice(top.data());
                dst[half..].copy_from_slice(bottom.data());
            }
        }
        None => {
            for (c, plane) in planes.iter().enumerate() {
                let full = plane.resample_region((0.0, 0.0, w as f64, h as f64), FEATURE_SIZE, FEATURE_SIZE);
                out.channel_mut(c).copy_from_slice(full.data());
            }
        }
    }
    Ok(out)
}

/// Standard deviations below this are treated as this value.
pub const STD_FLOOR: f64 = 1e-8;

fn channel_stats<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> (f64, f64) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt().max(STD_FLOOR))
}

/// Per-channel Z score with statistics pooled over all of a video's maps.
pub fn zscore_normalize(maps: &mut [FeatureMap]) -> Result<()> {
    if maps.len() < 2 {
        return Err(Error::Empty(format!(
            "per-video normalization needs at least 2 maps, got {}",
            maps.len()
        )));
    }
    for c in 0..FEATURE_CHANNELS {
        let (mean, std) = channel_stats(maps.iter().flat_map(|m| m.channel(c).iter()));
        for m in maps.iter_mut() {
            for v in m.channel_mut(c) {
                *v = (*v - mean) / std;
            }
        }
    }
    Ok(())
}

/// Per-channel Z score of a single map.
pub fn zscore_normalize_frame(map: &mut FeatureMap) {
    for c in 0..FEATURE_CHANNELS {
        let (mean, std) = channel_stats(map.channel(c).iter());
        for v in map.channel_mut(c) {
            *v = (*v - mean) / std;
        }
    }
}
