//! Laplacian pyramid, spatial-domain Riesz transform and the per-pixel unit
//! quaternions of the resulting monogenic signal.

use crate::{Error, Plane, Result};

/// Minimum side length of the coarsest requested subband.
pub const MIN_LEVEL_SIZE: usize = 8;

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Mirror index without repeating the edge sample (`-1 -> 1`, `n -> n - 2`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Binomial blur followed by dropping every odd row and column.
pub fn reduce(img: &Plane) -> Plane {
    let (w, h) = img.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    // Horizontal pass at even columns only.
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = img.row(y);
        for ox in 0..ow {
            let x = 2 * ox as isize;
            let mut acc = 0.0;
            for (k, c) in BINOMIAL.iter().enumerate() {
                acc += c * row[reflect(x + k as isize - 2, w)];
            }
            tmp[y * ow + ox] = acc;
        }
    }
    let mut out = vec![0.0; ow * oh];
    for oy in 0..oh {
        let y = 2 * oy as isize;
        let dst = &mut out[oy * ow..(oy + 1) * ow];
        for (k, c) in BINOMIAL.iter().enumerate() {
            let src = reflect(y + k as isize - 2, h);
            let src = &tmp[src * ow..(src + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }
    Plane::from_vec(ow, oh, out)
}

/// Upsamples by two with the polyphase binomial interpolator, producing a
/// `width × height` image (each at most `2 ×` the input).
pub fn expand(img: &Plane, width: usize, height: usize) -> Plane {
    let (w, h) = img.dims();
    debug_assert!(width <= 2 * w && height <= 2 * h);
    let interp = |get: &dyn Fn(isize) -> f64, o: usize| -> f64 {
        let i = (o / 2) as isize;
        if o % 2 == 0 {
            (get(i - 1) + 6.0 * get(i) + get(i + 1)) / 8.0
        } else {
            (get(i) + get(i + 1)) / 2.0
        }
    };
    let mut tmp = vec![0.0; width * h];
    for y in 0..h {
        let row = img.row(y);
        let get = |i: isize| row[reflect(i, w)];
        for ox in 0..width {
            tmp[y * width + ox] = interp(&get, ox);
        }
    }
    let mut out = vec![0.0; width * height];
    for oy in 0..height {
        let i = (oy / 2) as isize;
        let rows: Vec<(f64, usize)> = if oy % 2 == 0 {
            vec![(1.0 / 8.0, reflect(i - 1, h)), (6.0 / 8.0, reflect(i, h)), (1.0 / 8.0, reflect(i + 1, h))]
        } else {
            vec![(0.5, reflect(i, h)), (0.5, reflect(i + 1, h))]
        };
        let dst = &mut out[oy * width..(oy + 1) * width];
        for (c, r) in rows {
            for (d, s) in dst.iter_mut().zip(&tmp[r * width..(r + 1) * width]) {
                *d += c * s;
            }
        }
    }
    Plane::from_vec(width, height, out)
}

#[derive(Debug, Clone)]
pub struct LaplacianPyramid {
    /// Level `ℓ` (1-based) is `subbands[ℓ - 1]`, sized `ceil(H / 2^(ℓ-1))`.
    pub subbands: Vec<Plane>,
    pub lowpass_residual: Plane,
}

fn check_depth(img: &Plane, levels: usize) -> Result<()> {
    let (w, h) = img.dims();
    let coarsest = |n: usize| (0..levels.saturating_sub(1)).fold(n, |n, _| n.div_ceil(2));
    if levels == 0 || coarsest(w.min(h)) < MIN_LEVEL_SIZE {
        return Err(Error::PyramidTooDeep {
            levels,
            width: w,
            height: h,
        });
    }
    Ok(())
}

pub fn build_laplacian(image: &Plane, levels: usize) -> Result<LaplacianPyramid> {
    check_depth(image, levels)?;
    let mut subbands = Vec::with_capacity(levels);
    let mut current = image.clone();
    for _ in 0..levels {
        let coarse = reduce(&current);
        let up = expand(&coarse, current.width(), current.height());
        let mut band = current;
        for (b, u) in band.data_mut().iter_mut().zip(up.data()) {
            *b -= u;
        }
        subbands.push(band);
        current = coarse;
    }
    Ok(LaplacianPyramid {
        subbands,
        lowpass_residual: current,
    })
}

impl LaplacianPyramid {
    pub fn levels(&self) -> usize {
        self.subbands.len()
    }

    /// 1-based level access.
    pub fn level(&self, level: usize) -> Option<&Plane> {
        level.checked_sub(1).and_then(|i| self.subbands.get(i))
    }

    pub fn collapse(&self) -> Plane {
        let mut current = self.lowpass_residual.clone();
        for band in self.subbands.iter().rev() {
            let mut up = expand(&current, band.width(), band.height());
            for (u, b) in up.data_mut().iter_mut().zip(band.data()) {
                *u += b;
            }
            current = up;
        }
        current
    }
}

/// The single subband at `level` without keeping the finer ones.
pub fn laplacian_subband(image: &Plane, level: usize) -> Result<Plane> {
    check_depth(image, level)?;
    let mut current = image.clone();
    for _ in 1..level {
        current = reduce(&current);
    }
    let up = expand(&reduce(&current), current.width(), current.height());
    for (b, u) in current.data_mut().iter_mut().zip(up.data()) {
        *b -= u;
    }
    Ok(current)
}

/// Antisymmetric FIR pair approximating the Riesz transfer functions
/// `-i·ωx/‖ω‖` and `-i·ωy/‖ω‖`.
///
/// `taps[i - 1][|j|]` weights `f(x - i, y + j) - f(x + i, y + j)` in the
/// horizontal response; the vertical response uses the transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszFilter {
    radius: usize,
    taps: Vec<Vec<f64>>,
}

/// Least-squares fit of `ωx/‖ω‖` over the annulus `π/6 ≤ ‖ω‖ ≤ 2π/3`
/// (wavelengths 3 to 12 px) on a 7×7 support.
const DESIGNED_TAPS: [[f64; 4]; 3] = [
    [0.372_372_351_048, 0.100_279_070_066, 0.007_693_780_256, 0.007_120_983_972],
    [-0.067_967_934_177, 0.036_015_291_717, -0.016_800_337_516, 0.014_622_362_851],
    [0.042_068_140_268, 0.018_452_435_106, 0.015_486_297_078, 0.005_291_982_475],
];

impl Default for RieszFilter {
    fn default() -> Self {
        Self::designed()
    }
}

impl RieszFilter {
    /// 7×7 kernel accurate to a few percent across the pyramid passband.
    pub fn designed() -> Self {
        Self {
            radius: 3,
            taps: DESIGNED_TAPS.iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// The `[0.5, 0, -0.5]` central-difference pair. Its gain is `sin ω`, so it
    /// is only accurate near `ω = π/2`.
    pub fn three_tap() -> Self {
        Self {
            radius: 1,
            taps: vec![vec![0.5, 0.0]],
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Frequency response `(H1, H2)` of the pair at `(ωx, ωy)`, as the
    /// coefficient of `-i`.
    pub fn response(&self, wx: f64, wy: f64) -> (f64, f64) {
        let r = self.radius as isize;
        let (mut h1, mut h2) = (0.0, 0.0);
        for i in 1..=r {
            for j in -r..=r {
                let a = self.taps[i as usize - 1][j.unsigned_abs()];
                h1 += a * 2.0 * (wx * i as f64).sin() * (wy * j as f64).cos();
                h2 += a * 2.0 * (wy * i as f64).sin() * (wx * j as f64).cos();
            }
        }
        (h1, h2)
    }

    /// Applies both filters with mirrored borders.
    pub fn apply(&self, subband: &Plane) -> (Plane, Plane) {
        let (w, h) = subband.dims();
        let r = self.radius;
        let (pw, ph) = (w + 2 * r, h + 2 * r);
        let mut padded = vec![0.0; pw * ph];
        for py in 0..ph {
            let sy = reflect(py as isize - r as isize, h);
            let src = subband.row(sy);
            for px in 0..pw {
                padded[py * pw + px] = src[reflect(px as isize - r as isize, w)];
            }
        }
        let row = |py: usize| &padded[py * pw..(py + 1) * pw];

        let mut r1 = vec![0.0; w * h];
        let mut r2 = vec![0.0; w * h];
        for y in 0..h {
            let dst1 = &mut r1[y * w..(y + 1) * w];
            let dst2 = &mut r2[y * w..(y + 1) * w];
            for j in -(r as isize)..=(r as isize) {
                let src = row((y as isize + r as isize + j) as usize);
                for i in 1..=r {
                    let a = self.taps[i - 1][j.unsigned_abs()];
                    if a == 0.0 {
                        continue;
                    }
                    // f(x - i, y + j) - f(x + i, y + j)
                    let (lo, hi) = (&src[r - i..r - i + w], &src[r + i..r + i + w]);
                    for ((d, l), u) in dst1.iter_mut().zip(lo).zip(hi) {
                        *d += a * (l - u);
                    }
                }
            }
            // Transposed roles: taps[i][|j|] on f(x + j, y - i) - f(x + j, y + i).
            for i in 1..=r {
                let up = row(y + r - i);
                let down = row(y + r + i);
                for j in -(r as isize)..=(r as isize) {
                    let a = self.taps[i - 1][j.unsigned_abs()];
                    if a == 0.0 {
                        continue;
                    }
                    let off = (r as isize + j) as usize;
                    let (lo, hi) = (&up[off..off + w], &down[off..off + w]);
                    for ((d, l), u) in dst2.iter_mut().zip(lo).zip(hi) {
                        *d += a * (l - u);
                    }
                }
            }
        }
        (Plane::from_vec(w, h, r1), Plane::from_vec(w, h, r2))
    }
}

/// Riesz transform of one subband with the default filter.
pub fn riesz_transform(subband: &Plane) -> (Plane, Plane) {
    RieszFilter::default().apply(subband)
}

/// Monogenic signal `(I, R1, R2)` of one pyramid level.
#[derive(Debug, Clone)]
pub struct RieszLevel {
    pub i: Plane,
    pub r1: Plane,
    pub r2: Plane,
}

impl RieszLevel {
    pub fn new(subband: Plane, filter: &RieszFilter) -> Self {
        let (r1, r2) = filter.apply(&subband);
        Self { i: subband, r1, r2 }
    }

    pub fn max_amplitude(&self) -> f64 {
        self.i
            .data()
            .iter()
            .zip(self.r1.data())
            .zip(self.r2.data())
            .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Per-pixel unit quaternion `r̂ = (I + i·R1 + j·R2) / A` and amplitude `A`.
#[derive(Debug, Clone)]
pub struct UnitQuaternionField {
    width: usize,
    height: usize,
    /// `(w, x, y)` components; the `k` component is identically zero.
    pub q: Vec<[f64; 3]>,
    pub amplitude: Vec<f64>,
    /// False where `A ≤ amplitude_floor`; those pixels hold `(1, 0, 0)`.
    pub valid: Vec<bool>,
}

impl UnitQuaternionField {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

pub fn to_unit_quaternions(level: &RieszLevel, amplitude_floor: f64) -> UnitQuaternionField {
    let (width, height) = level.i.dims();
    let n = width * height;
    let mut q = Vec::with_capacity(n);
    let mut amplitude = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for ((&a, &b), &c) in level.i.data().iter().zip(level.r1.data()).zip(level.r2.data()) {
        let amp = (a * a + b * b + c * c).sqrt();
        amplitude.push(amp);
        if amp > amplitude_floor {
            q.push([a / amp, b / amp, c / amp]);
            valid.push(true);
        } else {
            q.push([1.0, 0.0, 0.0]);
            valid.push(false);
        }
    }
    UnitQuaternionField {
        width,
        height,
        q,
        amplitude,
        valid,
    }
}
