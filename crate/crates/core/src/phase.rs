//! Quaternionic phase differences between adjacent frames and their
//! accumulation over `K` frames.
//!
//! For a pattern whose local phase advances by `Δφ` along orientation `θ`,
//! the difference map holds `(Δφ·cosθ, Δφ·sinθ)`. With the Riesz sign
//! convention used here, a sinusoid of wavelength `λ` translating by `d`
//! pixels along its normal `n` yields `-(2π·d/λ)·n`.

use crate::pyramid::UnitQuaternionField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuatPhaseDiffMap {
    width: usize,
    height: usize,
    /// `Δφ·cosθ`, radians.
    pub u: Vec<f64>,
    /// `Δφ·sinθ`, radians.
    pub v: Vec<f64>,
    pub valid: Vec<bool>,
}

impl QuatPhaseDiffMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            u: vec![0.0; n],
            v: vec![0.0; n],
            valid: vec![true; n],
        }
    }

    /// Map with the same `(u, v)` at every pixel.
    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            u: vec![u; n],
            v: vec![v; n],
            valid: vec![true; n],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Vector part of `log q` for a unit quaternion `(w, x, y, z)`, principal branch.
#[inline]
pub fn quat_log_vector(w: f64, x: f64, y: f64, z: f64) -> [f64; 3] {
    let norm = (x * x + y * y + z * z).sqrt();
    if norm < 1e-9 {
        return [0.0; 3];
    }
    let s = w.clamp(-1.0, 1.0).acos() / norm;
    [x * s, y * s, z * s]
}

/// `log(r̂_curr · r̂_prev⁻¹)`, keeping the `i` and `j` parts.
pub fn phase_difference(
    curr: &UnitQuaternionField,
    prev: &UnitQuaternionField,
) -> Result<QuatPhaseDiffMap> {
    if curr.dims() != prev.dims() {
        return Err(Error::ShapeMismatch(format!(
            "phase difference of {:?} and {:?} fields",
            curr.dims(),
            prev.dims()
        )));
    }
    let (width, height) = curr.dims();
    let n = width * height;
    let mut out = QuatPhaseDiffMap {
        width,
        height,
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        valid: Vec::with_capacity(n),
    };
    for k in 0..n {
        let ok = curr.valid[k] && prev.valid[k];
        out.valid.push(ok);
        if !ok {
            out.u.push(0.0);
            out.v.push(0.0);
            continue;
        }
        let [a0, a1, a2] = curr.q[k];
        let [b0, b1, b2] = prev.q[k];
        // (a0 + a) (b0 - b) with a, b in the i-j plane.
        let w = a0 * b0 + a1 * b1 + a2 * b2;
        let x = b0 * a1 - a0 * b1;
        let y = b0 * a2 - a0 * b2;
        let z = -(a1 * b2 - a2 * b1);
        let [lu, lv, _] = quat_log_vector(w, x, y, z);
        out.u.push(lu);
        out.v.push(lv);
    }
    Ok(out)
}

/// Accumulated motion over a `K`-frame span.
#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedMotion {
    width: usize,
    height: usize,
    /// `ΔΦ·cosΘ`
    pub u: Vec<f64>,
    /// `ΔΦ·sinΘ`
    pub v: Vec<f64>,
    /// `|ΔΦ|`
    pub m: Vec<f64>,
}

impl AccumulatedMotion {
    pub fn from_components(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Self {
        assert!(u.len() == width * height && v.len() == u.len());
        let m = u.iter().zip(&v).map(|(a, b)| a.hypot(*b)).collect();
        Self {
            width,
            height,
            u,
            v,
            m,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Channels in feature order `(U, V, M)`.
    pub fn channels(&self) -> [&[f64]; 3] {
        [&self.u, &self.v, &self.m]
    }
}

/// Elementwise sum of `maps`.
pub fn accumulate(maps: &[QuatPhaseDiffMap]) -> Result<AccumulatedMotion> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Empty("accumulate needs at least one map".into()))?;
    let (w, h) = first.dims();
    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    for map in maps {
        if map.dims() != (w, h) {
            return Err(Error::ShapeMismatch(format!(
                "accumulating {:?} into {:?}",
                map.dims(),
                (w, h)
            )));
        }
        for (a, b) in u.iter_mut().zip(&map.u) {
            *a += b;
        }
        for (a, b) in v.iter_mut().zip(&map.v) {
            *a += b;
        }
    }
    Ok(AccumulatedMotion::from_components(w, h, u, v))
}

/// Sliding `K`-map sums: output `j` sums `maps[j..j + k]`.
pub fn accumulate_windows(maps: &[QuatPhaseDiffMap], k: usize) -> Result<Vec<AccumulatedMotion>> {
    if k == 0 {
        return Err(Error::Empty("accumulation span K must be >= 1".into()));
    }
    maps.windows(k).map(accumulate).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::{to_unit_quaternions, RieszLevel};
    use crate::Plane;
    use proptest::prelude::*;

    fn field(i: &[f64], r1: &[f64], r2: &[f64]) -> UnitQuaternionField {
        let n = i.len();
        to_unit_quaternions(
            &RieszLevel {
                i: Plane::from_vec(n, 1, i.to_vec()),
                r1: Plane::from_vec(n, 1, r1.to_vec()),
                r2: Plane::from_vec(n, 1, r2.to_vec()),
            },
            1e-12,
        )
    }

    fn polar_field(phases: &[(f64, f64)]) -> UnitQuaternionField {
        // (phase, orientation) -> (cos φ, sin φ cos θ, sin φ sin θ)
        let i: Vec<_> = phases.iter().map(|(p, _)| p.cos()).collect();
        let r1: Vec<_> = phases.iter().map(|(p, t)| p.sin() * t.cos()).collect();
        let r2: Vec<_> = phases.iter().map(|(p, t)| p.sin() * t.sin()).collect();
        field(&i, &r1, &r2)
    }

    #[test]
    fn identical_frames_have_zero_difference() {
        let f = polar_field(&[(0.3, 0.2), (1.0, -1.0), (2.5, 0.7)]);
        let d = phase_difference(&f, &f).unwrap();
        assert!(d.u.iter().chain(&d.v).all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn difference_recovers_phase_step_along_orientation() {
        let theta = 0.6f64;
        let prev = polar_field(&[(0.4, theta)]);
        let curr = polar_field(&[(0.65, theta)]);
        let d = phase_difference(&curr, &prev).unwrap();
        assert!((d.u[0] - 0.25 * theta.cos()).abs() < 1e-12);
        assert!((d.v[0] - 0.25 * theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn invalid_pixels_propagate() {
        let a = field(&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        let b = field(&[0.5, 1.0], &[0.5, 0.0], &[0.0, 0.0]);
        let d = phase_difference(&a, &b).unwrap();
        assert_eq!(d.valid, vec![true, false]);
        assert_eq!((d.u[1], d.v[1]), (0.0, 0.0));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = field(&[1.0], &[0.0], &[0.0]);
        let b = field(&[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(phase_difference(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn single_map_accumulation() {
        let mut m = QuatPhaseDiffMap::zeros(2, 1);
        m.u = vec![3.0, -1.0];
        m.v = vec![4.0, 0.5];
        let acc = accumulate(&[m.clone()]).unwrap();
        assert_eq!(acc.u, m.u);
        assert_eq!(acc.v, m.v);
        assert_eq!(acc.m[0], 5.0);
        assert!((acc.m[1] - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_maps_scale_with_k() {
        let maps = vec![QuatPhaseDiffMap::constant(3, 2, 0.1, -0.2); 6];
        let acc = accumulate(&maps).unwrap();
        for k in 0..6 {
            assert!((acc.u[k] - 0.6).abs() < 1e-12 && (acc.v[k] + 1.2).abs() < 1e-12);
            assert!((acc.m[k] - 6.0 * 0.05f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_maps_cancel() {
        let acc = accumulate(&[
            QuatPhaseDiffMap::constant(2, 2, 0.3, 0.7),
            QuatPhaseDiffMap::constant(2, 2, -0.3, -0.7),
        ])
        .unwrap();
        assert!(acc.u.iter().chain(&acc.v).chain(&acc.m).all(|&x| x == 0.0));
    }

    #[test]
    fn empty_accumulation_is_an_error() {
        assert!(accumulate(&[]).is_err());
        assert!(accumulate_windows(&[QuatPhaseDiffMap::zeros(1, 1)], 0).is_err());
    }

    fn arb_field(n: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), n)
    }

    proptest! {
        #[test]
        fn phase_difference_is_antisymmetric(a in arb_field(16), b in arb_field(16)) {
            let mk = |v: &[(f64, f64, f64)]| field(
                &v.iter().map(|p| p.0).collect::<Vec<_>>(),
                &v.iter().map(|p| p.1).collect::<Vec<_>>(),
                &v.iter().map(|p| p.2).collect::<Vec<_>>(),
            );
            let (fa, fb) = (mk(&a), mk(&b));
            let ab = phase_difference(&fa, &fb).unwrap();
            let ba = phase_difference(&fb, &fa).unwrap();
            for k in 0..16 {
                prop_assert!((ab.u[k] + ba.u[k]).abs() <= 1e-6);
                prop_assert!((ab.v[k] + ba.v[k]).abs() <= 1e-6);
                prop_assert!(ab.u[k].hypot(ab.v[k]) <= std::f64::consts::PI + 1e-12);
            }
        }

        #[test]
        fn accumulation_is_additive(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..10), split in 1usize..9) {
            let maps: Vec<_> = vals.iter().map(|&(u, v)| QuatPhaseDiffMap::constant(2, 2, u, v)).collect();
            let split = split.min(maps.len() - 1);
            let all = accumulate(&maps).unwrap();
            let (s1, s2) = (accumulate(&maps[..split]).unwrap(), accumulate(&maps[split..]).unwrap());
            for k in 0..4 {
                prop_assert!((all.u[k] - s1.u[k] - s2.u[k]).abs() <= 1e-6);
                prop_assert!((all.v[k] - s1.v[k] - s2.v[k]).abs() <= 1e-6);
                prop_assert!((all.m[k] - all.u[k].hypot(all.v[k])).abs() <= 1e-6);
            }
        }
    }
}
