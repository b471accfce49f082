//! Three-stream shallow CNN: one 3×3 convolution stream per feature channel,
//! 6×6 max pooling, and two fully connected layers down to a single score.
//!
//! Parameters live in one flat vector, in the order they are serialized:
//!
//! | block          | shape          |
//! |----------------|----------------|
//! | stream 1 conv  | 3 × 3 × 3, +3  |
//! | stream 2 conv  | 5 × 3 × 3, +5  |
//! | stream 3 conv  | 8 × 3 × 3, +8  |
//! | fc1            | 400 × 400, +400 (row = output unit) |
//! | fc2            | 400, +1        |

use std::io::{Read, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::roi::{FeatureMap, FEATURE_CHANNELS, FEATURE_SIZE};
use crate::{Error, Result};

pub const STREAM_FILTERS: [usize; 3] = [3, 5, 8];
const KSIZE: usize = 3;
const KLEN: usize = KSIZE * KSIZE;
const POOL: usize = 6;
const POOLED: usize = FEATURE_SIZE / POOL;
const POOLED_LEN: usize = POOLED * POOLED;
pub const HIDDEN: usize = 400;
/// Length of the concatenated pooled vector.
pub const FLAT: usize = 16 * POOLED_LEN;

const fn stream_offset(s: usize) -> usize {
    let mut off = 0;
    let mut i = 0;
    while i < s {
        off += STREAM_FILTERS[i] * (KLEN + 1);
        i += 1;
    }
    off
}

const FC1_W: usize = stream_offset(3);
const FC1_B: usize = FC1_W + HIDDEN * FLAT;
const FC2_W: usize = FC1_B + HIDDEN;
const FC2_B: usize = FC2_W + HIDDEN;
pub const PARAM_COUNT: usize = FC2_B + 1;

/// fc1 starts small so pooled cells that training rarely excites add little.
const FC1_INIT_GAIN: f64 = 0.1;

const MAGIC: &[u8; 8] = b"RMESNET1";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    params: Vec<f64>,
}

impl Weights {
    pub fn zeros() -> Self {
        Self {
            params: vec![0.0; PARAM_COUNT],
        }
    }

    /// Uniform fan-in scaled initialization `±sqrt(3 / fan_in)`, zero biases.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Self::zeros();
        let mut fill = |range: std::ops::Range<usize>, bound: f64, p: &mut [f64]| {
            let d = Uniform::new_inclusive(-bound, bound);
            for x in &mut p[range] {
                *x = d.sample(&mut rng);
            }
        };
        for (s, &f) in STREAM_FILTERS.iter().enumerate() {
            let o = stream_offset(s);
            fill(o..o + f * KLEN, (3.0 / KLEN as f64).sqrt(), &mut w.params);
        }
        fill(FC1_W..FC1_B, FC1_INIT_GAIN * (3.0 / FLAT as f64).sqrt(), &mut w.params);
        fill(FC2_W..FC2_B, (3.0 / HIDDEN as f64).sqrt(), &mut w.params);
        w
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::BadWeights(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::BadWeights("non-finite parameter".into()));
        }
        Ok(Self { params })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn fc2_bias_mut(&mut self) -> &mut f64 {
        &mut self.params[FC2_B]
    }

    /// Name of the block a flat parameter index falls in.
    pub fn block_of(index: usize) -> &'static str {
        match index {
            i if i < stream_offset(1) => "stream1",
            i if i < stream_offset(2) => "stream2",
            i if i < FC1_W => "stream3",
            i if i < FC1_B => "fc1.weight",
            i if i < FC2_W => "fc1.bias",
            i if i < FC2_B => "fc2.weight",
            _ => "fc2.bias",
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION])?;
        for p in &self.params {
            w.write_all(&(*p as f32).to_le_bytes())?;
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)
            .map_err(|e| Error::BadWeights(e.to_string()))?;
        if buf.len() < MAGIC.len() + 1 || &buf[..MAGIC.len()] != MAGIC {
            return Err(Error::BadWeights("bad magic".into()));
        }
        if buf[MAGIC.len()] != VERSION {
            return Err(Error::BadWeights(format!("unsupported version {}", buf[MAGIC.len()])));
        }
        let body = &buf[MAGIC.len() + 1..];
        if body.len() != 4 * PARAM_COUNT {
            return Err(Error::BadWeights(format!(
                "expected {} payload bytes, got {}",
                4 * PARAM_COUNT,
                body.len()
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Self::from_params(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    /// Pooled post-ReLU conv outputs, concatenated.
    pub pooled: [f64; FLAT],
    /// Position (`y * 30 + x`) of each pooled maximum.
    argmax: [u16; FLAT],
    pub hidden: [f64; HIDDEN],
    pub score: f64,
}

const PAD: usize = FEATURE_SIZE + 2;

fn padded(channel: &[f64]) -> [f64; PAD * PAD] {
    let mut p = [0.0; PAD * PAD];
    for y in 0..FEATURE_SIZE {
        p[(y + 1) * PAD + 1..(y + 1) * PAD + 1 + FEATURE_SIZE]
            .copy_from_slice(&channel[y * FEATURE_SIZE..(y + 1) * FEATURE_SIZE]);
    }
    p
}

/// 6×6 stride-6 max pool of a 30×30 plane, followed by ReLU.
fn max_pool(plane: &[f64], pooled: &mut [f64], argmax: &mut [u16]) {
    for py in 0..POOLED {
        for px in 0..POOLED {
            let mut best = f64::NEG_INFINITY;
            let mut at = 0;
            for yy in py * POOL..(py + 1) * POOL {
                for xx in px * POOL..(px + 1) * POOL {
                    let v = plane[yy * FEATURE_SIZE + xx];
                    if v > best {
                        best = v;
                        at = yy * FEATURE_SIZE + xx;
                    }
                }
            }
            // ReLU commutes with max.
            pooled[py * POOLED + px] = best.max(0.0);
            argmax[py * POOLED + px] = at as u16;
        }
    }
}

fn conv_pool(x: &FeatureMap, w: &[f64], pooled: &mut [f64; FLAT], argmax: &mut [u16; FLAT]) {
    let mut out = 0;
    let mut plane = [0.0; FEATURE_SIZE * FEATURE_SIZE];
    for (s, &nf) in STREAM_FILTERS.iter().enumerate() {
        let src = padded(x.channel(s));
        let base = stream_offset(s);
        for f in 0..nf {
            let k = &w[base + f * KLEN..base + (f + 1) * KLEN];
            let b = w[base + nf * KLEN + f];
            for y in 0..FEATURE_SIZE {
                let row = &mut plane[y * FEATURE_SIZE..(y + 1) * FEATURE_SIZE];
                row.fill(b);
                for dy in 0..KSIZE {
                    let line = &src[(y + dy) * PAD..(y + dy + 1) * PAD];
                    for dx in 0..KSIZE {
                        let c = k[dy * KSIZE + dx];
                        for (o, v) in row.iter_mut().zip(&line[dx..dx + FEATURE_SIZE]) {
                            *o += c * v;
                        }
                    }
                }
            }
            max_pool(&plane, &mut pooled[out..out + POOLED_LEN], &mut argmax[out..out + POOLED_LEN]);
            out += POOLED_LEN;
        }
    }
}

pub fn forward_cached(x: &FeatureMap, w: &Weights) -> Activations {
    let p = &w.params;
    let mut a = Activations {
        pooled: [0.0; FLAT],
        argmax: [0; FLAT],
        hidden: [0.0; HIDDEN],
        score: 0.0,
    };
    conv_pool(x, p, &mut a.pooled, &mut a.argmax);
    let mut score = p[FC2_B];
    for j in 0..HIDDEN {
        let row = &p[FC1_W + j * FLAT..FC1_W + (j + 1) * FLAT];
        let z = p[FC1_B + j] + dot(row, &a.pooled);
        let h = z.max(0.0);
        a.hidden[j] = h;
        score += p[FC2_W + j] * h;
    }
    a.score = score;
    a
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four partial sums let the compiler vectorize.
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Frame score.
pub fn forward(x: &FeatureMap, w: &Weights) -> f64 {
    forward_cached(x, w).score
}

/// Adds `d_score · ∂score/∂θ` to `grad`.
pub fn backward(x: &FeatureMap, a: &Activations, w: &Weights, d_score: f64, grad: &mut [f64]) {
    let p = &w.params;
    grad[FC2_B] += d_score;
    let mut d_pooled = [0.0; FLAT];
    for j in 0..HIDDEN {
        let h = a.hidden[j];
        grad[FC2_W + j] += d_score * h;
        if h <= 0.0 {
            continue;
        }
        let dz = d_score * p[FC2_W + j];
        grad[FC1_B + j] += dz;
        let row = FC1_W + j * FLAT;
        for (g, v) in grad[row..row + FLAT].iter_mut().zip(&a.pooled) {
            *g += dz * v;
        }
        for (d, wv) in d_pooled.iter_mut().zip(&p[row..row + FLAT]) {
            *d += dz * wv;
        }
    }
    let mut out = 0;
    for (s, &nf) in STREAM_FILTERS.iter().enumerate() {
        let src = padded(x.channel(s));
        let base = stream_offset(s);
        for f in 0..nf {
            for _ in 0..POOLED_LEN {
                let d = d_pooled[out];
                if a.pooled[out] > 0.0 && d != 0.0 {
                    let at = a.argmax[out] as usize;
                    let (y, xx) = (at / FEATURE_SIZE, at % FEATURE_SIZE);
                    for dy in 0..KSIZE {
                        for dx in 0..KSIZE {
                            grad[base + f * KLEN + dy * KSIZE + dx] += d * src[(y + dy) * PAD + xx + dx];
                        }
                    }
                    grad[base + nf * KLEN + f] += d;
                }
                out += 1;
            }
        }
    }
}

/// Mean squared error over a batch and its gradient.
pub fn mse_loss_and_grad(batch: &[(&FeatureMap, f64)], w: &Weights) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; PARAM_COUNT];
    let loss = mse_accumulate(batch, w, &mut grad);
    (loss, grad)
}

/// Like [`mse_loss_and_grad`] but writes into a caller-provided zeroed buffer.
pub fn mse_accumulate(batch: &[(&FeatureMap, f64)], w: &Weights, grad: &mut [f64]) -> f64 {
    let n = batch.len().max(1) as f64;
    let mut loss = 0.0;
    for (x, target) in batch {
        let a = forward_cached(x, w);
        let r = a.score - target;
        loss += r * r;
        backward(x, &a, w, 2.0 * r / n, grad);
    }
    loss / n
}

pub fn mse_loss(batch: &[(&FeatureMap, f64)], w: &Weights) -> f64 {
    let n = batch.len().max(1) as f64;
    batch
        .iter()
        .map(|(x, t)| (forward(x, w) - t).powi(2))
        .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelCost {
    pub params: usize,
    /// Two FLOPs per multiply-accumulate, one forward pass.
    pub flops: usize,
}

pub fn model_cost() -> ModelCost {
    let filters: usize = STREAM_FILTERS.iter().sum();
    let conv = filters * FEATURE_SIZE * FEATURE_SIZE * KLEN;
    let fc = HIDDEN * FLAT + HIDDEN;
    debug_assert_eq!(FEATURE_CHANNELS, STREAM_FILTERS.len());
    ModelCost {
        params: PARAM_COUNT,
        flops: 2 * (conv + fc),
    }
}
