//! Score smoothing, adaptive thresholding, peak picking and interval emission.

use crate::{Error, Result};

/// Network scores for frames `[k, k + len)` of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSequence {
    pub scores: Vec<f64>,
    pub fps: f64,
    pub k: usize,
}

impl ScoreSequence {
    pub fn new(scores: Vec<f64>, fps: f64, k: usize) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidSequence(format!("score {i} is not finite")));
        }
        Ok(Self { scores, fps, k })
    }

    /// Frame index of the first score.
    pub fn first_frame(&self) -> usize {
        self.k
    }

    /// Length of the underlying video, `T`.
    pub fn total_frames(&self) -> usize {
        self.k + self.scores.len()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpottedInterval {
    pub onset: usize,
    pub offset: usize,
    pub peak: usize,
}

/// Moving average over `[i - k, i + k]`.
///
/// Edge frames average over the part of the window inside the sequence.
/// With `strict` they are left as they are and only frames with a full
/// window are smoothed.
pub fn smooth(scores: &[f64], k: usize, strict: bool) -> Vec<f64> {
    let n = scores.len();
    if n < 2 * k + 1 && n > 0 {
        log::warn!("{n} scores is shorter than the {}-frame smoothing window", 2 * k + 1);
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for s in scores {
        prefix.push(prefix.last().unwrap() + s);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(n);
            if strict && (i < k || i + k >= n) {
                return scores[i];
            }
            if hi - lo == 1 {
                return scores[i];
            }
            // Direct sum for short windows keeps linearity exact to rounding.
            if hi - lo <= 64 {
                scores[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect()
}

/// `H = mean + h · (max − mean)`; `None` for an empty sequence.
pub fn threshold(smoothed: &[f64], h: f64) -> Option<f64> {
    if smoothed.is_empty() {
        return None;
    }
    let mean = smoothed.iter().sum::<f64>() / smoothed.len() as f64;
    let max = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(mean + h * (max - mean))
}

/// Indices of strict local maxima above `h_thr`, endpoints excluded.
pub fn local_maxima(smoothed: &[f64], h_thr: f64) -> Vec<usize> {
    let n = smoothed.len();
    if n < 3 {
        return Vec::new();
    }
    (1..n - 1)
        .filter(|&i| smoothed[i] > h_thr && smoothed[i] > smoothed[i - 1] && smoothed[i] > smoothed[i + 1])
        .collect()
}

/// Local maxima above `h_thr`, pruned so that kept peaks are at least
/// `min_distance` apart. Higher peaks win; equal heights go to the earlier
/// index. Result is ascending.
pub fn detect_peaks(smoothed: &[f64], h_thr: f64, min_distance: usize) -> Vec<usize> {
    let mut cand = local_maxima(smoothed, h_thr);
    cand.sort_by(|&a, &b| smoothed[b].total_cmp(&smoothed[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in cand {
        if kept.iter().all(|&p| p.abs_diff(c) >= min_distance) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// `[P − K, P + K]` clipped to `[0, T − 1]`.
pub fn peaks_to_intervals(peaks: &[usize], k: usize, t: usize) -> Vec<SpottedInterval> {
    let last = t.saturating_sub(1);
    peaks
        .iter()
        .map(|&p| SpottedInterval {
            onset: p.saturating_sub(k),
            offset: (p + k).min(last),
            peak: p,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotResult {
    pub smoothed: Vec<f64>,
    pub threshold: f64,
    /// Peak frames, in video frame indices.
    pub peaks: Vec<usize>,
    pub intervals: Vec<SpottedInterval>,
}

/// Full postprocessing chain for one video.
pub fn spot(seq: &ScoreSequence, h: f64, min_distance: usize, strict_smoothing: bool) -> SpotResult {
    let smoothed = smooth(&seq.scores, seq.k, strict_smoothing);
    let Some(thr) = threshold(&smoothed, h) else {
        return SpotResult {
            smoothed,
            threshold: 0.0,
            peaks: Vec::new(),
            intervals: Vec::new(),
        };
    };
    let peaks: Vec<usize> = detect_peaks(&smoothed, thr, min_distance.max(1))
        .into_iter()
        .map(|i| i + seq.first_frame())
        .collect();
    let intervals = peaks_to_intervals(&peaks, seq.k, seq.total_frames());
    SpotResult {
        smoothed,
        threshold: thr,
        peaks,
        intervals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_stays_constant() {
        for v in smooth(&[0.3; 20], 4, false) {
            assert!((v - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn impulse_spreads_over_three_frames() {
        let s = smooth(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 1, false);
        let third = 1.0 / 3.0;
        assert_eq!(s[0], 0.0);
        for (i, e) in [(1, 0.0), (2, third), (3, third), (4, third), (5, 0.0)] {
            assert!((s[i] - e).abs() < 1e-12, "{i}: {}", s[i]);
        }
    }

    #[test]
    fn edges_use_truncated_windows() {
        let s = smooth(&[1.0, 2.0, 3.0, 4.0, 5.0], 2, false);
        assert!((s[0] - 2.0).abs() < 1e-12);
        assert!((s[4] - 4.0).abs() < 1e-12);
        let strict = smooth(&[1.0, 2.0, 9.0, 4.0, 5.0], 2, true);
        assert_eq!((strict[0], strict[1], strict[4]), (1.0, 2.0, 5.0));
        assert!((strict[2] - 4.2).abs() < 1e-12);
    }

    #[test]
    fn threshold_endpoints() {
        let s = [0.0, 0.2, 0.6, 0.0];
        assert!((threshold(&s, 0.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((threshold(&s, 1.0).unwrap() - 0.6).abs() < 1e-12);
        assert!((threshold(&s, 0.7).unwrap() - 0.48).abs() < 1e-12);
        assert_eq!(threshold(&[], 0.5), None);
    }

    #[test]
    fn single_peak() {
        assert_eq!(detect_peaks(&[0.0, 0.0, 1.0, 0.0, 0.0], 0.5, 1), vec![2]);
        assert!(detect_peaks(&[0.1, 0.3, 0.2], 0.3, 1).is_empty());
        assert!(detect_peaks(&[1.0, 0.0, 0.0], 0.5, 1).is_empty());
    }

    #[test]
    fn close_peaks_keep_the_higher() {
        let s = [0.0, 0.8, 0.0, 0.9, 0.0];
        assert_eq!(detect_peaks(&s, 0.1, 3), vec![3]);
        assert_eq!(detect_peaks(&s, 0.1, 2), vec![1, 3]);
        let tie = [0.0, 0.9, 0.0, 0.9, 0.0];
        assert_eq!(detect_peaks(&tie, 0.1, 3), vec![1]);
    }

    #[test]
    fn interval_clipping() {
        let iv = peaks_to_intervals(&[100, 3, 297], 6, 300);
        assert_eq!((iv[0].onset, iv[0].offset), (94, 106));
        assert_eq!((iv[1].onset, iv[1].offset), (0, 9));
        assert_eq!((iv[2].onset, iv[2].offset), (291, 299));
        assert!(peaks_to_intervals(&[], 6, 300).is_empty());
    }

    #[test]
    fn spot_reports_video_frames() {
        let mut scores = vec![0.0; 60];
        for (i, v) in scores.iter_mut().enumerate() {
            *v = (-((i as f64 - 30.0) / 3.0).powi(2)).exp();
        }
        let r = spot(&ScoreSequence::new(scores, 30.0, 6).unwrap(), 0.7, 6, false);
        assert_eq!(r.peaks, vec![36]);
        assert_eq!(r.intervals, vec![SpottedInterval { onset: 30, offset: 42, peak: 36 }]);
    }

    #[test]
    fn flat_scores_give_no_peaks() {
        let r = spot(&ScoreSequence::new(vec![0.0; 94], 30.0, 6).unwrap(), 0.7, 6, false);
        assert!(r.peaks.is_empty() && r.intervals.is_empty());
    }

    fn arb_scores() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 3..60)
    }

    proptest! {
        #[test]
        fn smoothing_is_linear(x in prop::collection::vec(-1.0f64..1.0, 1..50), a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0usize..8) {
            let y: Vec<f64> = x.iter().rev().cloned().collect();
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let (sx, sy, sm) = (smooth(&x, k, false), smooth(&y, k, false), smooth(&mix, k, false));
            for i in 0..x.len() {
                prop_assert!((sm[i] - a * sx[i] - b * sy[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn peaks_are_spaced(s in arb_scores(), h in 0.0f64..1.0, d in 1usize..10) {
            let thr = threshold(&s, h).unwrap();
            let p = detect_peaks(&s, thr, d);
            for w in p.windows(2) {
                prop_assert!(w[1] - w[0] >= d);
            }
        }

        #[test]
        fn raising_the_threshold_never_adds_peaks(s in arb_scores(), h1 in 0.0f64..1.0, dh in 0.0f64..1.0, d in 1usize..8) {
            let h2 = (h1 + dh).min(1.0);
            let p1 = detect_peaks(&s, threshold(&s, h1).unwrap(), d);
            let p2 = detect_peaks(&s, threshold(&s, h2).unwrap(), d);
            prop_assert!(p2.iter().all(|p| p1.contains(p)));
        }

        #[test]
        fn constant_offset_keeps_peaks(s in arb_scores(), c in -5.0f64..5.0, h in 0.0f64..0.95, d in 1usize..8) {
            let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
            let p = detect_peaks(&s, threshold(&s, h).unwrap(), d);
            let q = detect_peaks(&shifted, threshold(&shifted, h).unwrap(), d);
            // Rounding may only matter for values within ulps of the threshold.
            let thr = threshold(&s, h).unwrap();
            let near = s.iter().any(|v| (v - thr).abs() < 1e-9);
            prop_assert!(near || p == q);
        }
    }
}
