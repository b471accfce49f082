//! Synthetic videos with analytically known motion.
//!
//! Backgrounds are sums of plane waves rendered in closed form, so there is
//! no resampling error. Micro-expression stand-ins are Gaussian bumps of
//! vertical displacement with a raised-cosine time course, placed inside the
//! brow or mouth region of a fixed 68-point face layout. Optional global
//! jitter moves the whole face (and its landmarks) with small rigid
//! transients so alignment has something to undo.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::align::SimilarityTransform;
use crate::io::{FrameSequence, LandmarkTrack, Landmarks, MEAnnotation};
use crate::roi::{BROWS, MOUTH};
use crate::{Error, Plane, Point2, Result, NUM_LANDMARKS};

/// Translating sinusoid and the phase step it should produce.
#[derive(Debug, Clone)]
pub struct SinusoidVideo {
    pub sequence: FrameSequence,
    /// `2π·|v|/λ`, radians per frame.
    pub rate: f64,
    /// Expected per-frame `(u, v)` phase difference, `−(2π·v/λ)·(cos α, sin α)`.
    pub expected_step: (f64, f64),
}

/// `I(p, t) = 0.5 + 0.4·cos(2π/λ · (n·p − v·t))`, with `n = (cos α, sin α)`,
/// so the pattern moves `v` pixels per frame along `n`.
pub fn gen_translating_sinusoid(
    wavelength: f64,
    velocity: f64,
    angle: f64,
    frames: usize,
    width: usize,
    height: usize,
) -> Result<SinusoidVideo> {
    if !(wavelength >= 4.0) {
        return Err(Error::Synth(format!("wavelength {wavelength} px is below 4 px")));
    }
    if velocity.abs() > wavelength / 4.0 {
        return Err(Error::Synth(format!(
            "velocity {velocity} px/frame exceeds a quarter wavelength"
        )));
    }
    let k = TAU / wavelength;
    let (s, c) = angle.sin_cos();
    let planes = (0..frames)
        .map(|t| {
            let shift = velocity * t as f64;
            Plane::from_fn(width, height, |x, y| {
                0.5 + 0.4 * (k * (c * x as f64 + s * y as f64 - shift)).cos()
            })
        })
        .collect();
    let sequence = FrameSequence::new("sinusoid", "synthetic", 30.0, planes)?;
    let rate = k * velocity;
    Ok(SinusoidVideo {
        sequence,
        rate: rate.abs(),
        expected_step: (-rate * c, -rate * s),
    })
}

/// One plane-wave component `a·cos(kx·x + ky·y + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Sinusoid { wavelength: f64, angle: f64 },
    /// Random plane waves with wavelengths in `[min_wavelength, max_wavelength]`
    /// and wave vectors within `orientation_spread` radians of vertical.
    Texture {
        seed: u64,
        components: usize,
        min_wavelength: f64,
        max_wavelength: f64,
        orientation_spread: f64,
    },
}

impl Pattern {
    /// Texture tuned to the default operating level of a face crop. Mostly
    /// horizontal structure, like brows and lips, so vertical motion is visible.
    pub fn default_texture(seed: u64) -> Self {
        Pattern::Texture {
            seed,
            components: 32,
            min_wavelength: 12.0,
            max_wavelength: 24.0,
            orientation_spread: PI / 6.0,
        }
    }

    fn min_wavelength(&self) -> f64 {
        match *self {
            Pattern::Sinusoid { wavelength, .. } => wavelength,
            Pattern::Texture { min_wavelength, .. } => min_wavelength,
        }
    }

    /// Components normalized to a total amplitude of 0.4.
    pub fn waves(&self) -> Vec<Wave> {
        match *self {
            Pattern::Sinusoid { wavelength, angle } => {
                let k = TAU / wavelength;
                vec![Wave {
                    amplitude: 0.4,
                    kx: k * angle.cos(),
                    ky: k * angle.sin(),
                    phase: 0.0,
                }]
            }
            Pattern::Texture {
                seed,
                components,
                min_wavelength,
                max_wavelength,
                orientation_spread,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut waves: Vec<Wave> = (0..components)
                    .map(|_| {
                        let lambda = rng.gen_range(min_wavelength..=max_wavelength);
                        let theta = PI / 2.0 + rng.gen_range(-1.0..=1.0) * orientation_spread;
                        let k = TAU / lambda;
                        Wave {
                            amplitude: rng.gen_range(0.5..1.0),
                            kx: k * theta.cos(),
                            ky: k * theta.sin(),
                            phase: rng.gen_range(0.0..TAU),
                        }
                    })
                    .collect();
                let total: f64 = waves.iter().map(|w| w.amplitude).sum();
                for w in &mut waves {
                    w.amplitude *= 0.4 / total;
                }
                waves
            }
        }
    }
}

/// Local vertical displacement `D·exp(−|p − c|²/2σ²)·w(t)`, where `w` rises
/// from 0 at `onset` to 1 midway and back to 0 at `offset`. Positive `D`
/// moves content down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthEvent {
    pub center: Point2,
    pub sigma: f64,
    pub displacement: f64,
    pub onset: usize,
    pub offset: usize,
}

impl SynthEvent {
    /// Temporal weight in `[0, 1]`.
    pub fn profile(&self, t: usize) -> f64 {
        if t <= self.onset || t >= self.offset {
            return 0.0;
        }
        let phase = (t - self.onset) as f64 / (self.offset - self.onset) as f64;
        0.5 * (1.0 - (TAU * phase).cos())
    }

    pub fn apex(&self) -> usize {
        (self.onset + self.offset) / 2
    }

    /// Radius beyond which the displacement is negligible.
    fn reach(&self) -> f64 {
        4.0 * self.sigma
    }
}

/// Rigid head motion: rotation (about the face centre) and translation
/// follow a raised-cosine bump over `[onset, onset + duration]`, or a
/// half-cosine step that stays put when `hold` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterTransient {
    pub onset: usize,
    pub duration: usize,
    pub dx: f64,
    pub dy: f64,
    pub rotation: f64,
    pub hold: bool,
}

impl JitterTransient {
    fn weight(&self, t: usize) -> f64 {
        if t <= self.onset {
            return 0.0;
        }
        let s = ((t - self.onset) as f64 / self.duration as f64).min(1.0);
        if self.hold {
            0.5 * (1.0 - (PI * s).cos())
        } else {
            0.5 * (1.0 - (TAU * s).cos())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub video_id: String,
    pub subject_id: String,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub frames: usize,
    pub pattern: Pattern,
    pub events: Vec<SynthEvent>,
    /// Local motions rendered like events but left out of the ground truth.
    pub distractors: Vec<SynthEvent>,
    pub jitter: Vec<JitterTransient>,
    /// Standard deviation of additive Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Landmarks in the rest pose.
    pub landmarks: Landmarks,
}

impl SynthSpec {
    /// Static 256×256 textured face with no events.
    pub fn new(video_id: &str, subject_id: &str, frames: usize, seed: u64) -> Self {
        Self {
            video_id: video_id.into(),
            subject_id: subject_id.into(),
            width: FRAME_SIZE,
            height: FRAME_SIZE,
            fps: 30.0,
            frames,
            pattern: Pattern::default_texture(seed),
            events: Vec::new(),
            distractors: Vec::new(),
            jitter: Vec::new(),
            noise_sigma: 0.0,
            seed,
            landmarks: face_template(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        if self.frames < 2 || self.width == 0 || self.height == 0 {
            return bad("need at least 2 frames of nonzero size".into());
        }
        let lim = self.pattern.min_wavelength() / 4.0;
        let all: Vec<&SynthEvent> = self.events.iter().chain(&self.distractors).collect();
        for (i, e) in all.iter().enumerate() {
            if e.offset < e.onset + 3 {
                return bad(format!("event {i} lasts fewer than 3 frames"));
            }
            if e.offset >= self.frames {
                return bad(format!("event {i} ends after the last frame"));
            }
            if e.center.x < 0.0 || e.center.y < 0.0 || e.center.x >= self.width as f64 || e.center.y >= self.height as f64 {
                return bad(format!("event {i} centre lies outside the frame"));
            }
            if !(e.sigma > 0.0) || e.displacement.abs() > lim {
                return bad(format!(
                    "event {i}: sigma must be positive and |displacement| at most {lim} px"
                ));
            }
        }
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate().skip(i + 1) {
                let overlap_t = a.onset < b.offset && b.onset < a.offset;
                let dist = ((a.center.x - b.center.x).powi(2) + (a.center.y - b.center.y).powi(2)).sqrt();
                if overlap_t && dist < a.reach() + b.reach() {
                    return bad(format!("events {i} and {j} overlap in space and time"));
                }
            }
        }
        for (i, j) in self.jitter.iter().enumerate() {
            if j.duration == 0 {
                return bad(format!("jitter transient {i} has zero duration"));
            }
        }
        Ok(())
    }

    fn face_center(&self) -> Point2 {
        let n = self.landmarks.len() as f64;
        let (sx, sy) = self.landmarks.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        Point2::new(sx / n, sy / n)
    }

    /// Rest pose to frame `t`.
    pub fn pose(&self, t: usize) -> SimilarityTransform {
        let (mut dx, mut dy, mut rot) = (0.0, 0.0, 0.0);
        for j in &self.jitter {
            let w = j.weight(t);
            dx += w * j.dx;
            dy += w * j.dy;
            rot += w * j.rotation;
        }
        let c = self.face_center();
        let (s, co) = rot.sin_cos();
        SimilarityTransform {
            scale: 1.0,
            rotation: rot,
            tx: c.x + dx - (co * c.x - s * c.y),
            ty: c.y + dy - (s * c.x + co * c.y),
        }
    }
}

/// A rendered video with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthVideo {
    pub sequence: FrameSequence,
    pub annotations: Vec<MEAnnotation>,
    pub landmarks: LandmarkTrack,
    pub events: Vec<SynthEvent>,
}

fn eval_waves(waves: &[Wave], x: f64, y: f64) -> f64 {
    waves
        .iter()
        .map(|w| w.amplitude * (w.kx * x + w.ky * y + w.phase).cos())
        .sum()
}

/// Renders one frame: rest-pose content seen through `pose`, events applied
/// in rest-pose coordinates.
fn render_frame(spec: &SynthSpec, waves: &[Wave], t: usize) -> Plane {
    let (w, h) = (spec.width, spec.height);
    let inv = spec.pose(t).inverse();
    // q = A·p + b maps frame pixels to rest-pose coordinates.
    let o = inv.apply(Point2::new(0.0, 0.0));
    let ex = inv.apply(Point2::new(1.0, 0.0));
    let ey = inv.apply(Point2::new(0.0, 1.0));
    let (a11, a21) = (ex.x - o.x, ex.y - o.y);
    let (a12, a22) = (ey.x - o.x, ey.y - o.y);
    let mut data = vec![0.5; w * h];
    let mut cx = vec![0.0; w];
    let mut sx = vec![0.0; w];
    for wave in waves {
        // Phase at pixel (x, y) = fx·x + fy·y + c0.
        let fx = wave.kx * a11 + wave.ky * a21;
        let fy = wave.kx * a12 + wave.ky * a22;
        let c0 = wave.kx * o.x + wave.ky * o.y + wave.phase;
        for x in 0..w {
            let (s, c) = (fx * x as f64 + c0).sin_cos();
            cx[x] = wave.amplitude * c;
            sx[x] = wave.amplitude * s;
        }
        for y in 0..h {
            let (sy, cy) = (fy * y as f64).sin_cos();
            let row = &mut data[y * w..(y + 1) * w];
            for x in 0..w {
                row[x] += cx[x] * cy - sx[x] * sy;
            }
        }
    }
    let pose = spec.pose(t);
    for e in spec.events.iter().chain(&spec.distractors) {
        let p = e.profile(t);
        if p == 0.0 || e.displacement == 0.0 {
            continue;
        }
        let c = pose.apply(e.center);
        let r = e.reach() + 2.0;
        let x0 = (c.x - r).floor().max(0.0) as usize;
        let y0 = (c.y - r).floor().max(0.0) as usize;
        let x1 = ((c.x + r).ceil() as usize).min(w - 1);
        let y1 = ((c.y + r).ceil() as usize).min(h - 1);
        let two_s2 = 2.0 * e.sigma * e.sigma;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let q = inv.apply(Point2::new(x as f64, y as f64));
                let d2 = (q.x - e.center.x).powi(2) + (q.y - e.center.y).powi(2);
                let dy = e.displacement * p * (-d2 / two_s2).exp();
                if dy.abs() < 1e-9 {
                    continue;
                }
                data[y * w + x] = 0.5 + eval_waves(waves, q.x, q.y - dy);
            }
        }
    }
    Plane::from_vec(w, h, data)
}

pub fn gen_micro_motion_video(spec: &SynthSpec) -> Result<SynthVideo> {
    spec.validate()?;
    let waves = spec.pattern.waves();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).map_err(|e| Error::Synth(e.to_string()))?;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut points = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let mut f = render_frame(spec, &waves, t);
        if spec.noise_sigma > 0.0 {
            for v in f.data_mut() {
                *v += noise.sample(&mut rng);
            }
        }
        frames.push(f);
        let pose = spec.pose(t);
        points.push(spec.landmarks.map(|p| pose.apply(p)));
    }
    let annotations = spec
        .events
        .iter()
        .map(|e| MEAnnotation {
            video_id: spec.video_id.clone(),
            subject_id: spec.subject_id.clone(),
            onset: e.onset,
            apex: Some(e.apex()),
            offset: e.offset,
        })
        .collect();
    Ok(SynthVideo {
        sequence: FrameSequence::new(spec.video_id.clone(), spec.subject_id.clone(), spec.fps, frames)?,
        annotations,
        landmarks: LandmarkTrack::from_points(points),
        events: spec.events.clone(),
    })
}

/// Side of the square synthetic frames.
pub const FRAME_SIZE: usize = 256;

const FACE_X0: f64 = 53.0;
const FACE_Y0: f64 = 40.0;
const FACE_W: f64 = 150.0;
const FACE_H: f64 = 170.0;

fn face_point(u: f64, v: f64) -> Point2 {
    Point2::new(FACE_X0 + u * FACE_W, FACE_Y0 + v * FACE_H)
}

/// Frontal 68-point layout (jaw, brows, nose, eyes, lips) in a 256×256 frame.
pub fn face_template() -> Landmarks {
    let mut p = [Point2::new(0.0, 0.0); NUM_LANDMARKS];
    for (i, q) in p[0..17].iter_mut().enumerate() {
        let a = PI - PI * i as f64 / 16.0;
        *q = face_point(0.5 + 0.5 * a.cos(), 0.35 + 0.65 * a.sin());
    }
    for i in 0..5 {
        let t = i as f64 / 4.0;
        let arch = 0.08 * (PI * t).sin();
        p[17 + i] = face_point(0.12 + 0.30 * t, 0.27 - arch);
        p[22 + i] = face_point(0.58 + 0.30 * t, 0.27 - arch);
    }
    for i in 0..4 {
        p[27 + i] = face_point(0.5, 0.34 + 0.07 * i as f64);
    }
    for i in 0..5 {
        let t = i as f64 / 4.0;
        p[31 + i] = face_point(0.40 + 0.20 * t, 0.62 + 0.02 * (PI * t).sin());
    }
    for i in 0..6 {
        let a = TAU * i as f64 / 6.0;
        p[36 + i] = face_point(0.28 - 0.08 * a.cos(), 0.38 - 0.03 * a.sin());
        p[42 + i] = face_point(0.72 - 0.08 * a.cos(), 0.38 - 0.03 * a.sin());
    }
    for i in 0..12 {
        let a = TAU * i as f64 / 12.0;
        p[48 + i] = face_point(0.5 - 0.17 * a.cos(), 0.80 - 0.06 * a.sin());
    }
    for i in 0..8 {
        let a = TAU * i as f64 / 8.0;
        p[60 + i] = face_point(0.5 - 0.11 * a.cos(), 0.80 - 0.025 * a.sin());
    }
    p
}

/// Where events are placed, in rest-pose coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventSite {
    LeftBrow,
    RightBrow,
    Mouth,
}

impl EventSite {
    pub const ALL: [EventSite; 3] = [EventSite::LeftBrow, EventSite::RightBrow, EventSite::Mouth];

    pub fn center(&self, lm: &Landmarks) -> Point2 {
        let mean = |r: std::ops::Range<usize>| {
            let n = r.len() as f64;
            let (x, y) = lm[r].iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
            Point2::new(x / n, y / n)
        };
        match self {
            EventSite::LeftBrow => mean(BROWS.start..BROWS.start + 5),
            EventSite::RightBrow => mean(BROWS.start + 5..BROWS.end),
            EventSite::Mouth => mean(MOUTH),
        }
    }
}

/// Distractor sites away from both RoIs: the cheeks and the nose.
pub fn distractor_sites() -> [Point2; 3] {
    [face_point(0.22, 0.55), face_point(0.78, 0.55), face_point(0.5, 0.5)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitterSpec {
    /// Transients per video, inclusive range.
    pub count: (usize, usize),
    pub duration: (usize, usize),
    /// Largest translation per axis, pixels.
    pub max_shift: f64,
    /// Largest rotation, radians.
    pub max_rotation: f64,
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            count: (2, 4),
            duration: (8, 16),
            max_shift: 3.0,
            max_rotation: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub prefix: String,
    pub videos: usize,
    pub subjects: usize,
    pub frames: usize,
    pub fps: f64,
    pub event_duration: usize,
    /// Events per video, inclusive range.
    pub events_per_video: (usize, usize),
    /// Displacement magnitude range in pixels.
    pub displacement: (f64, f64),
    pub sigma: (f64, f64),
    /// Draw the direction of each event at random instead of always upward.
    pub bidirectional: bool,
    pub noise_sigma: f64,
    pub jitter: Option<JitterSpec>,
    /// Unannotated local motions outside the RoIs per video, inclusive range.
    pub distractors_per_video: (usize, usize),
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            prefix: "syn".into(),
            videos: 10,
            subjects: 5,
            frames: 300,
            fps: 30.0,
            event_duration: 12,
            events_per_video: (1, 3),
            displacement: (2.0, 2.5),
            sigma: (6.0, 8.0),
            bidirectional: false,
            noise_sigma: 0.001,
            jitter: None,
            distractors_per_video: (0, 0),
            seed: 0,
        }
    }
}

impl DatasetSpec {
    /// Specs for every video, without rendering.
    pub fn video_specs(&self) -> Result<Vec<SynthSpec>> {
        if self.subjects == 0 || self.videos == 0 {
            return Err(Error::Synth("need at least one subject and one video".into()));
        }
        let margin = 2 * self.event_duration;
        let gap = 3 * self.event_duration;
        let need = self.events_per_video.1 * (self.event_duration + gap) + 2 * margin;
        if self.frames < need {
            return Err(Error::Synth(format!(
                "{} frames cannot hold {} events of {} frames",
                self.frames, self.events_per_video.1, self.event_duration
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let template = face_template();
        (0..self.videos)
            .map(|v| {
                let seed = rng.gen::<u64>();
                let mut spec = SynthSpec::new(
                    &format!("{}{v:03}", self.prefix),
                    &format!("s{:02}", v % self.subjects),
                    self.frames,
                    seed,
                );
                spec.fps = self.fps;
                spec.noise_sigma = self.noise_sigma;
                let n = rng.gen_range(self.events_per_video.0..=self.events_per_video.1);
                let mut busy: Vec<(usize, usize)> = Vec::new();
                let fits = |busy: &[(usize, usize)], a: usize, b: usize| {
                    busy.iter().all(|&(x, y)| b + gap <= x || y + gap <= a)
                };
                // One event per equal segment keeps them `gap` apart.
                let seg = (self.frames - 2 * margin) / n.max(1);
                for i in 0..n {
                    let lo = margin + i * seg;
                    let onset = rng.gen_range(lo..=lo + seg - self.event_duration - gap);
                    let offset = onset + self.event_duration;
                    busy.push((onset, offset));
                    let site = EventSite::ALL[rng.gen_range(0..3)];
                    let c = site.center(&template);
                    let sign = if self.bidirectional && rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    spec.events.push(SynthEvent {
                        center: Point2::new(c.x + rng.gen_range(-3.0..3.0), c.y + rng.gen_range(-2.0..2.0)),
                        sigma: rng.gen_range(self.sigma.0..=self.sigma.1),
                        displacement: sign * rng.gen_range(self.displacement.0..=self.displacement.1),
                        onset,
                        offset,
                    });
                }
                spec.events.sort_by_key(|e| e.onset);
                if let Some(j) = &self.jitter {
                    let m = rng.gen_range(j.count.0..=j.count.1);
                    let mut tries = 0;
                    while spec.jitter.len() < m && tries < 1000 {
                        tries += 1;
                        let duration = rng.gen_range(j.duration.0..=j.duration.1);
                        let onset = rng.gen_range(1..self.frames - duration - 1);
                        if !fits(&busy, onset, onset + duration) {
                            continue;
                        }
                        busy.push((onset, onset + duration));
                        spec.jitter.push(JitterTransient {
                            onset,
                            duration,
                            dx: rng.gen_range(-j.max_shift..=j.max_shift),
                            dy: rng.gen_range(-j.max_shift..=j.max_shift),
                            rotation: rng.gen_range(-j.max_rotation..=j.max_rotation),
                            hold: rng.gen_bool(0.5),
                        });
                    }
                }
                let m = rng.gen_range(self.distractors_per_video.0..=self.distractors_per_video.1);
                let sites = distractor_sites();
                let mut tries = 0;
                while spec.distractors.len() < m && tries < 1000 {
                    tries += 1;
                    let onset = rng.gen_range(margin..self.frames - margin - self.event_duration);
                    let offset = onset + self.event_duration;
                    if !fits(&busy, onset, offset) {
                        continue;
                    }
                    busy.push((onset, offset));
                    let c = sites[rng.gen_range(0..sites.len())];
                    spec.distractors.push(SynthEvent {
                        center: Point2::new(c.x + rng.gen_range(-3.0..3.0), c.y + rng.gen_range(-2.0..2.0)),
                        sigma: rng.gen_range(self.sigma.0..=self.sigma.1),
                        displacement: -rng.gen_range(self.displacement.0..=self.displacement.1),
                        onset,
                        offset,
                    });
                }
                if spec.distractors.len() < m {
                    log::warn!("{}: placed {} of {m} distractors", spec.video_id, spec.distractors.len());
                }
                Ok(spec)
            })
            .collect()
    }
}

pub fn gen_dataset(spec: &DatasetSpec) -> Result<Vec<SynthVideo>> {
    spec.video_specs()?.iter().map(gen_micro_motion_video).collect()
}
