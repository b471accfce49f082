//! Frame labels and mini-batch SGD training of the spotting network.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse, parse_bool};
use crate::eval::{interval_iou, IOU_THRESHOLD};
use crate::io::MEAnnotation;
use crate::net::{mse_accumulate, Weights, PARAM_COUNT};
use crate::roi::FeatureMap;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    /// Positives are repeated until they make up at least this fraction of
    /// the negatives.
    pub positive_oversample_ratio: f64,
    /// Feed each sample left-right mirrored with probability 1/2.
    pub mirror_augment: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 256,
            momentum: 0.9,
            positive_oversample_ratio: 0.25,
            mirror_augment: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Applies one `key = value` setting. Returns `Ok(false)` for unknown keys.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "learning_rate" | "lr" => self.learning_rate = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "momentum" => self.momentum = parse(key, value)?,
            "positive_oversample_ratio" => self.positive_oversample_ratio = parse(key, value)?,
            "mirror_augment" => self.mirror_augment = parse_bool(key, value)?,
            "train_seed" => self.seed = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.positive_oversample_ratio >= 0.0) {
            return Err(Error::Config("positive_oversample_ratio must be non-negative".into()));
        }
        Ok(())
    }
}

/// Binary targets for frames `[k, t)`: 1 when the window `[i − k, i]` has
/// IoU ≥ 0.5 with some annotated interval.
pub fn make_labels(annotations: &[MEAnnotation], k: usize, t: usize) -> Vec<u8> {
    (k..t)
        .map(|i| {
            let w = ((i - k) as f64, i as f64);
            let best = annotations
                .iter()
                .filter_map(|a| interval_iou(w, (a.onset as f64, a.offset as f64)).ok())
                .fold(0.0, f64::max);
            u8::from(best >= IOU_THRESHOLD)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: Weights,
    /// Mean training loss of each epoch.
    pub loss_trace: Vec<f64>,
}

/// Epoch ordering: all negatives plus positives repeated up to the
/// oversampling ratio, shuffled.
fn epoch_order(pos: &[usize], neg: &[usize], ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = neg.to_vec();
    let want = ((ratio * neg.len() as f64).round() as usize).max(pos.len());
    if !pos.is_empty() {
        let mut p = pos.to_vec();
        while order.len() < neg.len() + want {
            p.shuffle(rng);
            let take = (neg.len() + want - order.len()).min(p.len());
            order.extend_from_slice(&p[..take]);
        }
    }
    order.shuffle(rng);
    order
}

/// Trains from `init` weights with SGD and momentum on an MSE loss.
pub fn train_from(init: Weights, samples: &[(&FeatureMap, f64)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Train("empty training set".into()));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..samples.len()).partition(|&i| samples[i].1 >= 0.5);
    if pos.is_empty() || neg.is_empty() {
        log::warn!(
            "training set has only {} samples; proceeding",
            if pos.is_empty() { "negative" } else { "positive" }
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = init;
    let mut velocity = vec![0.0; PARAM_COUNT];
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mirrored: Vec<FeatureMap> = if cfg.mirror_augment {
        samples.iter().map(|(f, _)| f.mirrored()).collect()
    } else {
        Vec::new()
    };
    for epoch in 0..cfg.epochs {
        let order = epoch_order(&pos, &neg, cfg.positive_oversample_ratio, &mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            for &i in chunk {
                if cfg.mirror_augment && rng.gen_bool(0.5) {
                    batch.push((&mirrored[i], samples[i].1));
                } else {
                    batch.push(samples[i]);
                }
            }
            grad.fill(0.0);
            total += mse_accumulate(&batch, &w, &mut grad) * chunk.len() as f64;
            for ((p, v), g) in w.params_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *p -= cfg.learning_rate * *v;
            }
        }
        let mean = total / order.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Train(format!("loss diverged in epoch {epoch}")));
        }
        log::debug!("epoch {epoch}: loss {mean:.5}");
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { weights: w, loss_trace })
}

/// Trains freshly initialized weights seeded from `cfg.seed`.
pub fn train(samples: &[(&FeatureMap, f64)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_from(Weights::init(cfg.seed), samples, cfg)
}
