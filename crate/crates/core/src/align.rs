//! Landmark-based similarity alignment and the fixed-size face crop.

use crate::{Error, Plane, Point2, Result, FACE_SIZE};

/// 4-DOF similarity `p ↦ s·R(θ)·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    /// Counter-clockwise in image coordinates (x right, y down), radians.
    pub rotation: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub const fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            tx: 0.0,
            ty: 0.0,
        }
    }

    #[inline]
    fn linear(&self) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        (self.scale * c, self.scale * s)
    }

    #[inline]
    pub fn apply(&self, p: Point2) -> Point2 {
        let (a, b) = self.linear();
        Point2::new(a * p.x - b * p.y + self.tx, b * p.x + a * p.y + self.ty)
    }

    pub fn inverse(&self) -> Self {
        let scale = 1.0 / self.scale;
        let rotation = -self.rotation;
        let (s, c) = rotation.sin_cos();
        let (a, b) = (scale * c, scale * s);
        Self {
            scale,
            rotation,
            tx: -(a * self.tx - b * self.ty),
            ty: -(b * self.tx + a * self.ty),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.apply(Point2::new(other.tx, other.ty));
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation + other.rotation,
            tx: t.x,
            ty: t.y,
        }
    }
}

/// Least-squares similarity plus its RMS residual in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub transform: SimilarityTransform,
    pub residual: f64,
}

fn centroid(pts: &[Point2]) -> Point2 {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Point2::new(sx / n, sy / n)
}

/// Rejects point sets whose scatter matrix is (numerically) rank deficient.
fn check_spread(pts: &[Point2], c: Point2, which: &str) -> Result<()> {
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let trace = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    if trace <= 1e-12 {
        return Err(Error::DegenerateLandmarks(format!("{which} points coincide")));
    }
    // Smallest eigenvalue relative to the largest.
    let disc = ((sxx - syy).powi(2) / 4.0 + sxy * sxy).sqrt();
    let lmax = trace / 2.0 + disc;
    let lmin = det / lmax;
    if lmin <= 1e-9 * lmax {
        return Err(Error::DegenerateLandmarks(format!("{which} points are collinear")));
    }
    Ok(())
}

/// Procrustes fit of the similarity mapping `landmarks` onto `reference`.
pub fn compute_alignment(landmarks: &[Point2], reference: &[Point2]) -> Result<Alignment> {
    if landmarks.len() != reference.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} landmarks vs {} reference points",
            landmarks.len(),
            reference.len()
        )));
    }
    if landmarks.iter().chain(reference).any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::DegenerateLandmarks("non-finite coordinate".into()));
    }
    if landmarks.len() < 3 {
        return Err(Error::DegenerateLandmarks("fewer than 3 points".into()));
    }
    let pc = centroid(landmarks);
    let qc = centroid(reference);
    check_spread(landmarks, pc, "landmark")?;
    check_spread(reference, qc, "reference")?;

    let (mut num_a, mut num_b, mut den) = (0.0, 0.0, 0.0);
    for (p, q) in landmarks.iter().zip(reference) {
        let (px, py) = (p.x - pc.x, p.y - pc.y);
        let (qx, qy) = (q.x - qc.x, q.y - qc.y);
        num_a += px * qx + py * qy;
        num_b += px * qy - py * qx;
        den += px * px + py * py;
    }
    let (a, b) = (num_a / den, num_b / den);
    let mut transform = SimilarityTransform {
        scale: a.hypot(b),
        rotation: b.atan2(a),
        tx: 0.0,
        ty: 0.0,
    };
    let moved = transform.apply(pc);
    transform.tx = qc.x - moved.x;
    transform.ty = qc.y - moved.y;

    let sq: f64 = landmarks
        .iter()
        .zip(reference)
        .map(|(p, q)| {
            let m = transform.apply(*p);
            (m.x - q.x).powi(2) + (m.y - q.y).powi(2)
        })
        .sum();
    Ok(Alignment {
        transform,
        residual: (sq / landmarks.len() as f64).sqrt(),
    })
}

/// Axis-aligned rectangle in reference-frame pixel-edge coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropBox {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl CropBox {
    /// Bounding box of `points` grown by `margin × size` on every side.
    pub fn around(points: &[Point2], margin: f64) -> Result<Self> {
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
            return Err(Error::DegenerateLandmarks("zero-area face box".into()));
        }
        Ok(Self {
            x0: x0 - margin * w,
            y0: y0 - margin * h,
            width: w * (1.0 + 2.0 * margin),
            height: h * (1.0 + 2.0 * margin),
        })
    }

    /// Maps a reference-frame point into output-crop pixel coordinates.
    pub fn to_crop(&self, p: Point2, out: usize) -> Point2 {
        let sx = out as f64 / self.width;
        let sy = out as f64 / self.height;
        Point2::new(
            (p.x - self.x0 + 0.5) * sx - 0.5,
            (p.y - self.y0 + 0.5) * sy - 0.5,
        )
    }

    /// Inverse of [`CropBox::to_crop`].
    pub fn from_crop(&self, c: Point2, out: usize) -> Point2 {
        let sx = self.width / out as f64;
        let sy = self.height / out as f64;
        Point2::new(
            self.x0 + (c.x + 0.5) * sx - 0.5,
            self.y0 + (c.y + 0.5) * sy - 0.5,
        )
    }
}

/// Warps `frame` into the reference pose and resamples `crop_box` onto a
/// [`FACE_SIZE`]² grid. Bilinear; samples outside the frame read as 0.
pub fn warp_crop(frame: &Plane, transform: &SimilarityTransform, crop_box: &CropBox) -> Plane {
    warp_crop_to(frame, transform, crop_box, FACE_SIZE)
}

pub fn warp_crop_to(
    frame: &Plane,
    transform: &SimilarityTransform,
    crop_box: &CropBox,
    out: usize,
) -> Plane {
    // Output pixel -> reference point -> frame point is affine, so walk it
    // incrementally.
    let inv = transform.inverse();
    let origin = inv.apply(crop_box.from_crop(Point2::new(0.0, 0.0), out));
    let step_x = inv.apply(crop_box.from_crop(Point2::new(1.0, 0.0), out));
    let step_y = inv.apply(crop_box.from_crop(Point2::new(0.0, 1.0), out));
    let (dxx, dxy) = (step_x.x - origin.x, step_x.y - origin.y);
    let (dyx, dyy) = (step_y.x - origin.x, step_y.y - origin.y);
    let mut data = Vec::with_capacity(out * out);
    for r in 0..out {
        let (rx, ry) = (origin.x + r as f64 * dyx, origin.y + r as f64 * dyy);
        for c in 0..out {
            let x = rx + c as f64 * dxx;
            let y = ry + c as f64 * dxy;
            data.push(frame.sample_bilinear(x, y, 0.0));
        }
    }
    Plane::from_vec(out, out, data)
}
