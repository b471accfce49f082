//! Zero-phase temporal FIR filtering of phase-difference sequences.

use std::f64::consts::PI;

use crate::config::FilterKind;
use crate::phase::QuatPhaseDiffMap;
use crate::{Error, Result};

/// Symmetric (linear-phase) FIR applied centred, so it adds no group delay.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalFilter {
    taps: Vec<f64>,
}

/// `2·floor(fps / 10) + 1` taps (about 100 ms of support), at least 5.
pub fn filter_length(fps: f64) -> usize {
    (2 * (fps / 10.0).floor() as usize + 1).max(5)
}

/// Hamming-windowed sinc lowpass with unit DC gain; `cutoff` in cycles/sample.
fn windowed_sinc(len: usize, cutoff: f64) -> Vec<f64> {
    let half = (len / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|n| {
            let n = n.unsigned_abs() as f64;
            let sinc = if n == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * n).sin() / (PI * n)
            };
            let window = 0.54 + 0.46 * (2.0 * PI * n / (len - 1) as f64).cos();
            sinc * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

impl TemporalFilter {
    pub fn design(kind: FilterKind, cutoff_hz: f64, fps: f64) -> Result<Self> {
        let nyquist = fps / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
            return Err(Error::Filter(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz at {fps} fps"
            )));
        }
        let len = filter_length(fps);
        let taps = match kind {
            FilterKind::Lowpass => windowed_sinc(len, cutoff_hz / fps),
            FilterKind::Bandpass { low_hz } => {
                if !(low_hz > 0.0 && low_hz < cutoff_hz) {
                    return Err(Error::Filter(format!(
                        "bandpass low edge {low_hz} Hz must lie in (0, {cutoff_hz}) Hz"
                    )));
                }
                let hi = windowed_sinc(len, cutoff_hz / fps);
                let lo = windowed_sinc(len, low_hz / fps);
                hi.iter().zip(&lo).map(|(a, b)| a - b).collect()
            }
        };
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Real frequency response at `omega` radians/sample.
    pub fn response(&self, omega: f64) -> f64 {
        let half = (self.taps.len() / 2) as isize;
        self.taps
            .iter()
            .enumerate()
            .map(|(i, t)| t * (omega * (i as isize - half) as f64).cos())
            .sum()
    }

    /// Filters one series, mirroring it at both ends (`x[-1] = x[1]`).
    pub fn apply(&self, series: &[f64]) -> Vec<f64> {
        let n = series.len();
        let half = (self.taps.len() / 2) as isize;
        (0..n as isize)
            .map(|t| {
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * series[mirror(t + i as isize - half, n)])
                    .sum()
            })
            .collect()
    }
}

#[inline]
fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    while i < 0 || i >= n {
        i = if i < 0 { -i } else { 2 * (n - 1) - i };
    }
    i as usize
}

/// Filters every pixel's `(u, v)` time series. Validity flags are kept per frame.
pub fn temporal_filter(
    seq: &[QuatPhaseDiffMap],
    cutoff_hz: f64,
    fps: f64,
    kind: FilterKind,
) -> Result<Vec<QuatPhaseDiffMap>> {
    let filter = TemporalFilter::design(kind, cutoff_hz, fps)?;
    filter_sequence(seq, &filter)
}

pub fn filter_sequence(seq: &[QuatPhaseDiffMap], filter: &TemporalFilter) -> Result<Vec<QuatPhaseDiffMap>> {
    let n = seq.len();
    if n < filter.len() {
        return Err(Error::Filter(format!(
            "sequence of {n} maps is shorter than the {}-tap filter",
            filter.len()
        )));
    }
    let dims = seq[0].dims();
    if let Some(bad) = seq.iter().find(|m| m.dims() != dims) {
        return Err(Error::ShapeMismatch(format!(
            "temporal filter over {:?} and {:?} maps",
            dims,
            bad.dims()
        )));
    }
    let mut out: Vec<QuatPhaseDiffMap> = seq
        .iter()
        .map(|m| {
            let mut z = QuatPhaseDiffMap::zeros(dims.0, dims.1);
            z.valid.clone_from(&m.valid);
            z
        })
        .collect();
    let half = (filter.len() / 2) as isize;
    // Frame-major accumulation keeps memory access contiguous.
    for t in 0..n {
        for (i, &c) in filter.taps().iter().enumerate() {
            let src = &seq[mirror(t as isize + i as isize - half, n)];
            let dst = &mut out[t];
            for (d, s) in dst.u.iter_mut().zip(&src.u) {
                *d += c * s;
            }
            for (d, s) in dst.v.iter_mut().zip(&src.v) {
                *d += c * s;
            }
        }
    }
    Ok(out)
}
