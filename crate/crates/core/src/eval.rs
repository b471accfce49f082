//! Interval matching, precision/recall/F1, and leave-one-subject-out folds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::io::{MEAnnotation, VideoIntervals};
use crate::postprocess::SpottedInterval;
use crate::{Error, Result};

/// IoU at or above which a spotted interval counts as a hit.
pub const IOU_THRESHOLD: f64 = 0.5;

/// One-to-one assignment of predictions to ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchStrategy {
    /// Maximum number of disjoint matching pairs.
    #[default]
    Optimal,
    /// Pairs taken in descending IoU order.
    Greedy,
}

/// IoU of two closed intervals measured with real lengths `offset − onset`.
pub fn interval_iou(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    for &(onset, offset) in [&a, &b] {
        if !(offset > onset) {
            return Err(Error::DegenerateInterval { onset, offset });
        }
    }
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    Ok(inter / union)
}

fn edges(pred: &[(f64, f64)], gt: &[(f64, f64)], strict: bool) -> Result<Vec<Vec<(usize, f64)>>> {
    pred.iter()
        .map(|&p| {
            let mut row = Vec::new();
            for (j, &g) in gt.iter().enumerate() {
                let iou = interval_iou(p, g)?;
                let hit = if strict { iou > IOU_THRESHOLD } else { iou >= IOU_THRESHOLD };
                if hit {
                    row.push((j, iou));
                }
            }
            Ok(row)
        })
        .collect()
}

fn greedy(adj: &[Vec<(usize, f64)>], n_gt: usize) -> usize {
    let mut pairs: Vec<(f64, usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, iou)| (iou, i, j)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; adj.len()];
    let mut used_g = vec![false; n_gt];
    let mut n = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            n += 1;
        }
    }
    n
}

fn augment(i: usize, adj: &[Vec<(usize, f64)>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &(j, _) in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].map_or(true, |o| augment(o, adj, seen, owner)) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

fn maximum_matching(adj: &[Vec<(usize, f64)>], n_gt: usize) -> usize {
    let mut owner = vec![None; n_gt];
    let mut n = 0;
    for i in 0..adj.len() {
        let mut seen = vec![false; n_gt];
        if augment(i, adj, &mut seen, &mut owner) {
            n += 1;
        }
    }
    n
}

/// Number of true positives between two interval lists.
pub fn count_matches(
    pred: &[(f64, f64)],
    gt: &[(f64, f64)],
    strategy: MatchStrategy,
    strict: bool,
) -> Result<usize> {
    let adj = edges(pred, gt, strict)?;
    let best = maximum_matching(&adj, gt.len());
    Ok(match strategy {
        MatchStrategy::Optimal => best,
        MatchStrategy::Greedy => {
            let g = greedy(&adj, gt.len());
            if g != best {
                log::debug!("greedy matching found {g} pairs where {best} are possible");
            }
            g
        }
    })
}

/// Per-video counts: ground truth `X`, spotted `Y`, true positives `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VideoCounts {
    pub ground_truth: usize,
    pub spotted: usize,
    pub true_positives: usize,
}

impl VideoCounts {
    pub fn from_tp_fp_fn(tp: usize, fp: usize, fn_: usize) -> Self {
        Self {
            ground_truth: tp + fn_,
            spotted: tp + fp,
            true_positives: tp,
        }
    }

    pub fn false_positives(&self) -> usize {
        self.spotted - self.true_positives
    }

    pub fn false_negatives(&self) -> usize {
        self.ground_truth - self.true_positives
    }
}

impl std::ops::Add for VideoCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            ground_truth: self.ground_truth + o.ground_truth,
            spotted: self.spotted + o.spotted,
            true_positives: self.true_positives + o.true_positives,
        }
    }
}

impl std::iter::Sum for VideoCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

fn span(i: &SpottedInterval) -> (f64, f64) {
    (i.onset as f64, i.offset as f64)
}

fn ann_span(a: &MEAnnotation) -> (f64, f64) {
    (a.onset as f64, a.offset as f64)
}

pub fn match_and_count(
    pred: &[SpottedInterval],
    gt: &[MEAnnotation],
    strategy: MatchStrategy,
    strict: bool,
) -> Result<VideoCounts> {
    let p: Vec<_> = pred.iter().map(span).collect();
    let g: Vec<_> = gt.iter().map(ann_span).collect();
    Ok(VideoCounts {
        ground_truth: gt.len(),
        spotted: pred.len(),
        true_positives: count_matches(&p, &g, strategy, strict)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of counts pooled over videos.
pub fn f1(counts: &VideoCounts) -> Metrics {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(counts.true_positives, counts.spotted);
    let recall = ratio(counts.true_positives, counts.ground_truth);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics { precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub held_out_subject: String,
    pub train_videos: Vec<String>,
    pub test_videos: Vec<String>,
}

/// One fold per subject, subjects in sorted order. `videos` holds
/// `(video_id, subject_id)` pairs.
pub fn loso_folds(videos: &[(String, String)]) -> Result<Vec<Fold>> {
    let subjects: BTreeSet<&str> = videos.iter().map(|(_, s)| s.as_str()).collect();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    Ok(subjects
        .into_iter()
        .map(|s| {
            let (test, train): (Vec<_>, Vec<_>) = videos.iter().partition(|(_, subj)| subj == s);
            Fold {
                held_out_subject: s.to_string(),
                train_videos: train.into_iter().map(|(v, _)| v.clone()).collect(),
                test_videos: test.into_iter().map(|(v, _)| v.clone()).collect(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoReport {
    pub video_id: String,
    pub subject_id: String,
    pub counts: VideoCounts,
}

/// Per-video counts and pooled metrics for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub videos: Vec<VideoReport>,
}

impl EvalReport {
    pub fn total(&self) -> VideoCounts {
        self.videos.iter().map(|v| v.counts).sum()
    }

    pub fn metrics(&self) -> Metrics {
        f1(&self.total())
    }

    /// Counts pooled per subject, sorted by subject id.
    pub fn per_subject(&self) -> BTreeMap<String, VideoCounts> {
        let mut out: BTreeMap<String, VideoCounts> = BTreeMap::new();
        for v in &self.videos {
            let e = out.entry(v.subject_id.clone()).or_default();
            *e = *e + v.counts;
        }
        out
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::InvalidSequence(format!("writing report: {e}"));
        wtr.write_record(["scope", "id", "gt", "spotted", "tp", "fp", "fn", "precision", "recall", "f1"])
            .map_err(err)?;
        let mut row = |scope: &str, id: &str, c: &VideoCounts| {
            let m = f1(c);
            wtr.write_record([
                scope.to_string(),
                id.to_string(),
                c.ground_truth.to_string(),
                c.spotted.to_string(),
                c.true_positives.to_string(),
                c.false_positives().to_string(),
                c.false_negatives().to_string(),
                format!("{:.4}", m.precision),
                format!("{:.4}", m.recall),
                format!("{:.4}", m.f1),
            ])
        };
        for v in &self.videos {
            row("video", &v.video_id, &v.counts).map_err(err)?;
        }
        for (s, c) in self.per_subject() {
            row("subject", &s, &c).map_err(err)?;
        }
        row("total", "all", &self.total()).map_err(err)?;
        wtr.flush().map_err(|e| Error::InvalidSequence(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(f))
    }

    /// Plain-text table of pooled counts and metrics.
    pub fn summary(&self) -> String {
        let t = self.total();
        let m = f1(&t);
        let mut s = String::new();
        let _ = writeln!(s, "{:>8} {:>8} {:>6} {:>6} {:>6} {:>9} {:>7} {:>7}", "videos", "GT", "TP", "FP", "FN", "precision", "recall", "F1");
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>6} {:>6} {:>6} {:>9.4} {:>7.4} {:>7.4}",
            self.videos.len(),
            t.ground_truth,
            t.true_positives,
            t.false_positives(),
            t.false_negatives(),
            m.precision,
            m.recall,
            m.f1
        );
        s
    }
}

/// Scores spotted intervals against annotations. Every predicted video id must
/// be annotated; annotated videos without predictions count as all misses.
/// `extra_videos` names videos known to contain no events.
pub fn evaluate(
    predictions: &[VideoIntervals],
    annotations: &[MEAnnotation],
    extra_videos: &[(String, String)],
    strategy: MatchStrategy,
    strict: bool,
) -> Result<EvalReport> {
    let mut gt: BTreeMap<&str, (String, Vec<MEAnnotation>)> = BTreeMap::new();
    for (v, s) in extra_videos {
        gt.entry(v).or_insert_with(|| (s.clone(), Vec::new()));
    }
    for a in annotations {
        gt.entry(&a.video_id)
            .or_insert_with(|| (a.subject_id.clone(), Vec::new()))
            .1
            .push(a.clone());
    }
    let mut pred: BTreeMap<&str, Vec<SpottedInterval>> = BTreeMap::new();
    for p in predictions {
        pred.entry(&p.video_id).or_default().push(p.interval);
    }
    let unmatched: Vec<String> = pred.keys().filter(|v| !gt.contains_key(*v)).map(|v| v.to_string()).collect();
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedVideos(unmatched));
    }
    let videos = gt
        .iter()
        .map(|(v, (subject, anns))| {
            let p = pred.get(v).map(Vec::as_slice).unwrap_or(&[]);
            Ok(VideoReport {
                video_id: v.to_string(),
                subject_id: subject.clone(),
                counts: match_and_count(p, anns, strategy, strict)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport { videos })
}
