//! End-to-end wiring: frames and landmarks to feature maps, scores and
//! spotted intervals, plus training and evaluation over many videos.

use std::time::Instant;

use rayon::prelude::*;

use crate::align::{compute_alignment, warp_crop, CropBox, SimilarityTransform};
use crate::config::{Config, Normalization, RunConfig};
use crate::eval::{evaluate, loso_folds, EvalReport, Fold};
use crate::filter::{filter_sequence, TemporalFilter};
use crate::io::{FrameSequence, LandmarkTrack, Landmarks, MEAnnotation, VideoIntervals};
use crate::net::{forward, Weights};
use crate::phase::{accumulate_windows, phase_difference, AccumulatedMotion};
use crate::postprocess::{spot, ScoreSequence, SpotResult};
use crate::pyramid::{laplacian_subband, to_unit_quaternions, RieszFilter, RieszLevel};
use crate::roi::{extract_features, roi_boxes_from_landmarks, zscore_normalize, zscore_normalize_frame, FeatureMap, RoiBoxes};
use crate::synth::SynthVideo;
use crate::train::{make_labels, train, TrainOutcome};
use crate::{Error, Result, FACE_SIZE};

/// Wall-clock cost of each preprocessing stage, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    /// Per frame: similarity fit and warp to the face crop.
    pub align: Vec<f64>,
    /// Per frame: Laplacian subband, Riesz pair, unit quaternions.
    pub pyramid: Vec<f64>,
    /// Per frame pair: quaternionic phase difference.
    pub phase: Vec<f64>,
    /// Whole video: temporal filter and accumulation.
    pub temporal: f64,
    /// Whole video: RoI resampling and normalization.
    pub features: f64,
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

impl StageTimings {
    pub fn frames(&self) -> usize {
        self.align.len()
    }

    /// Median per-frame preprocessing cost, with whole-video stages spread
    /// evenly over the frames.
    pub fn per_frame_median_ms(&self) -> f64 {
        let n = self.frames().max(1) as f64;
        median(&self.align) + median(&self.pyramid) + median(&self.phase) + (self.temporal + self.features) / n
    }

    pub fn report(&self) -> String {
        let n = self.frames().max(1) as f64;
        format!(
            "per-frame median ms: align {:.2}, pyramid {:.2}, phase {:.2}, temporal {:.2}, features {:.2}, total {:.2}",
            median(&self.align),
            median(&self.pyramid),
            median(&self.phase),
            self.temporal / n,
            self.features / n,
            self.per_frame_median_ms()
        )
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Landmarks for frame `t`: the latest entry at or before `t`, else the first.
fn landmarks_at(track: &LandmarkTrack, t: usize) -> &Landmarks {
    let i = track.frames.partition_point(|&f| f <= t);
    &track.points[i.saturating_sub(1)]
}

/// Feature maps of one video, one per frame in `[K, T)`.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub features: Vec<FeatureMap>,
    pub roi_boxes: RoiBoxes,
    pub timings: StageTimings,
}

/// Accumulated motion maps for frames `[K, T)`, the RoI boxes in crop
/// coordinates, and timings of the stages run so far.
pub fn motion_maps(
    seq: &FrameSequence,
    track: &LandmarkTrack,
    cfg: &RunConfig,
) -> Result<(Vec<AccumulatedMotion>, RoiBoxes, StageTimings)> {
    cfg.validate()?;
    if track.is_empty() {
        return Err(Error::Empty(format!("no landmarks for {}", seq.video_id)));
    }
    let t_len = seq.len();
    if t_len <= cfg.k {
        return Err(Error::InvalidSequence(format!(
            "{}: {t_len} frames is not more than K = {}",
            seq.video_id, cfg.k
        )));
    }
    let reference: &Landmarks = landmarks_at(track, 0);
    let crop = CropBox::around(reference, cfg.crop_margin)?;
    let in_crop: Vec<_> = reference.iter().map(|&p| crop.to_crop(p, FACE_SIZE)).collect();
    let roi_boxes = roi_boxes_from_landmarks(&in_crop, cfg.roi_margin)?;
    let temporal = TemporalFilter::design(cfg.filter_kind, cfg.cutoff_hz, seq.fps)?;
    let riesz = RieszFilter::designed();

    let mut timings = StageTimings::default();
    let mut diffs = Vec::with_capacity(t_len - 1);
    let mut prev = None;
    for (t, frame) in seq.frames().iter().enumerate() {
        let start = Instant::now();
        let transform = if cfg.use_alignment {
            compute_alignment(landmarks_at(track, t), reference)
                .map_err(|e| Error::InvalidSequence(format!("{} frame {t}: {e}", seq.video_id)))?
                .transform
        } else {
            SimilarityTransform::identity()
        };
        let face = warp_crop(frame, &transform, &crop);
        timings.align.push(ms_since(start));

        let start = Instant::now();
        let level = RieszLevel::new(laplacian_subband(&face, cfg.pyramid_level)?, &riesz);
        let floor = cfg.amplitude_floor * level.max_amplitude();
        let quats = to_unit_quaternions(&level, floor);
        timings.pyramid.push(ms_since(start));

        if let Some(p) = &prev {
            let start = Instant::now();
            diffs.push(phase_difference(&quats, p)?);
            timings.phase.push(ms_since(start));
        }
        prev = Some(quats);
    }

    let start = Instant::now();
    let filtered = filter_sequence(&diffs, &temporal)
        .map_err(|e| Error::InvalidSequence(format!("{}: {e}", seq.video_id)))?;
    // Output j covers differences j+1 ..= j+K, i.e. frame j + K.
    let motion = accumulate_windows(&filtered, cfg.k)?;
    timings.temporal = ms_since(start);
    Ok((motion, roi_boxes, timings))
}

/// Debug view of [`motion_maps`].
pub fn accumulated_motion(seq: &FrameSequence, track: &LandmarkTrack, cfg: &RunConfig) -> Result<Vec<AccumulatedMotion>> {
    Ok(motion_maps(seq, track, cfg)?.0)
}

pub fn preprocess_video(seq: &FrameSequence, track: &LandmarkTrack, cfg: &RunConfig) -> Result<Preprocessed> {
    let (motion, roi_boxes, mut timings) = motion_maps(seq, track, cfg)?;
    let start = Instant::now();
    let boxes = cfg.use_roi.then_some(&roi_boxes);
    let mut features = motion
        .iter()
        .map(|m| extract_features(m, cfg.pyramid_level, boxes))
        .collect::<Result<Vec<_>>>()?;
    match cfg.normalization {
        Normalization::PerVideo => zscore_normalize(&mut features)?,
        Normalization::PerFrame => features.iter_mut().for_each(zscore_normalize_frame),
    }
    timings.features = ms_since(start);
    debug_assert_eq!(features.len(), seq.len() - cfg.k);
    Ok(Preprocessed {
        features,
        roi_boxes,
        timings,
    })
}

pub fn score_features(features: &[FeatureMap], weights: &Weights) -> Vec<f64> {
    features.iter().map(|f| forward(f, weights)).collect()
}

/// Scores and postprocesses one video's feature maps.
pub fn spot_features(features: &[FeatureMap], weights: &Weights, fps: f64, cfg: &RunConfig) -> Result<(Vec<f64>, SpotResult)> {
    let scores = score_features(features, weights);
    let seq = ScoreSequence::new(scores.clone(), fps, cfg.k)?;
    Ok((scores, spot(&seq, cfg.h, cfg.min_peak_distance(), cfg.strict_smoothing)))
}

/// A video reduced to what training and evaluation need.
#[derive(Debug, Clone)]
pub struct PreparedVideo {
    pub video_id: String,
    pub subject_id: String,
    pub fps: f64,
    pub frames: usize,
    pub features: Vec<FeatureMap>,
    pub annotations: Vec<MEAnnotation>,
    pub timings: StageTimings,
}

impl PreparedVideo {
    pub fn labels(&self, k: usize) -> Vec<u8> {
        make_labels(&self.annotations, k, self.frames)
    }
}

pub fn prepare(seq: &FrameSequence, track: &LandmarkTrack, annotations: Vec<MEAnnotation>, cfg: &RunConfig) -> Result<PreparedVideo> {
    let p = preprocess_video(seq, track, cfg)?;
    Ok(PreparedVideo {
        video_id: seq.video_id.clone(),
        subject_id: seq.subject_id.clone(),
        fps: seq.fps,
        frames: seq.len(),
        features: p.features,
        annotations,
        timings: p.timings,
    })
}

/// Preprocesses synthetic videos, in parallel across videos.
pub fn prepare_synth(videos: &[SynthVideo], cfg: &RunConfig) -> Result<Vec<PreparedVideo>> {
    videos
        .par_iter()
        .map(|v| prepare(&v.sequence, &v.landmarks, v.annotations.clone(), cfg))
        .collect()
}

/// Trains on every frame of `videos`.
pub fn train_videos(videos: &[&PreparedVideo], cfg: &Config) -> Result<TrainOutcome> {
    let k = cfg.run.k;
    let labels: Vec<Vec<u8>> = videos.iter().map(|v| v.labels(k)).collect();
    let samples: Vec<(&FeatureMap, f64)> = videos
        .iter()
        .zip(&labels)
        .flat_map(|(v, l)| v.features.iter().zip(l).map(|(f, &s)| (f, s as f64)))
        .collect();
    train(&samples, &cfg.train)
}

pub fn spot_videos(videos: &[&PreparedVideo], weights: &Weights, cfg: &RunConfig) -> Result<Vec<VideoIntervals>> {
    let mut out = Vec::new();
    for v in videos {
        let (_, r) = spot_features(&v.features, weights, v.fps, cfg)?;
        out.extend(r.intervals.into_iter().map(|interval| VideoIntervals {
            video_id: v.video_id.clone(),
            interval,
        }));
    }
    Ok(out)
}

pub fn evaluate_videos(videos: &[&PreparedVideo], weights: &Weights, cfg: &RunConfig) -> Result<EvalReport> {
    let preds = spot_videos(videos, weights, cfg)?;
    let anns: Vec<MEAnnotation> = videos.iter().flat_map(|v| v.annotations.clone()).collect();
    let all: Vec<(String, String)> = videos.iter().map(|v| (v.video_id.clone(), v.subject_id.clone())).collect();
    evaluate(&preds, &anns, &all, cfg.matching, cfg.strict_iou)
}

#[derive(Debug, Clone)]
pub struct LosoResult {
    pub folds: Vec<(Fold, EvalReport)>,
}

impl LosoResult {
    /// All folds' videos in one report.
    pub fn pooled(&self) -> EvalReport {
        EvalReport {
            videos: self.folds.iter().flat_map(|(_, r)| r.videos.clone()).collect(),
        }
    }
}

/// Leave-one-subject-out: train on all other subjects, evaluate the held-out one.
pub fn run_loso(videos: &[PreparedVideo], cfg: &Config) -> Result<LosoResult> {
    let ids: Vec<(String, String)> = videos.iter().map(|v| (v.video_id.clone(), v.subject_id.clone())).collect();
    let folds = loso_folds(&ids)?;
    let by_id = |names: &[String]| -> Vec<&PreparedVideo> {
        videos.iter().filter(|v| names.contains(&v.video_id)).collect()
    };
    let mut out = Vec::with_capacity(folds.len());
    for fold in folds {
        log::info!("fold {}: {} train / {} test videos", fold.held_out_subject, fold.train_videos.len(), fold.test_videos.len());
        let trained = train_videos(&by_id(&fold.train_videos), cfg)?;
        let report = evaluate_videos(&by_id(&fold.test_videos), &trained.weights, &cfg.run)?;
        out.push((fold, report));
    }
    Ok(LosoResult { folds: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_micro_motion_video, SynthSpec};

    #[test]
    fn feature_count_is_t_minus_k() {
        let spec = SynthSpec::new("v", "s", 40, 3);
        let v = gen_micro_motion_video(&spec).unwrap();
        let p = preprocess_video(&v.sequence, &v.landmarks, &RunConfig::default()).unwrap();
        assert_eq!(p.features.len(), 34);
        assert_eq!(p.timings.frames(), 40);
        assert_eq!(p.timings.phase.len(), 39);
    }

    #[test]
    fn empty_landmarks_fail() {
        let spec = SynthSpec::new("v", "s", 12, 3);
        let v = gen_micro_motion_video(&spec).unwrap();
        let empty = LandmarkTrack { frames: vec![], points: vec![] };
        assert!(preprocess_video(&v.sequence, &empty, &RunConfig::default()).is_err());
    }

    #[test]
    fn zero_weights_find_nothing() {
        let spec = SynthSpec::new("v", "s", 40, 3);
        let v = gen_micro_motion_video(&spec).unwrap();
        let p = preprocess_video(&v.sequence, &v.landmarks, &RunConfig::default()).unwrap();
        let (scores, r) = spot_features(&p.features, &Weights::zeros(), 30.0, &RunConfig::default()).unwrap();
        assert!(scores.iter().all(|&s| s == 0.0));
        assert!(r.intervals.is_empty());
    }

    #[test]
    fn landmark_lookup_holds_last_entry() {
        let lm = crate::synth::face_template();
        let track = LandmarkTrack {
            frames: vec![0, 5],
            points: vec![lm, lm.map(|p| crate::Point2::new(p.x + 1.0, p.y))],
        };
        assert_eq!(landmarks_at(&track, 3)[0], lm[0]);
        assert_eq!(landmarks_at(&track, 9)[0].x, lm[0].x + 1.0);
    }
}
