//! `mespot` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mespot::config::Config;
use mespot::eval::evaluate;
use mespot::io::{self, VideoIntervals};
use mespot::net::{model_cost, Weights};
use mespot::pipeline::{self, PreparedVideo};
use mespot::raster;
use mespot::synth::{self, DatasetSpec, JitterSpec};

mod dataset;

#[derive(Parser)]
#[command(name = "mespot", version, about = "Micro-expression spotting from Riesz-pyramid phase")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set k=47`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Skip face alignment.
    #[arg(long, global = true)]
    no_align: bool,
    /// Use the whole face instead of eyebrow and mouth regions.
    #[arg(long, global = true)]
    no_roi: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset in the standard directory layout.
    Synth(SynthArgs),
    /// Turn one video into a feature dump.
    Preprocess(PreprocessArgs),
    /// Train weights on every video of a dataset directory.
    Train(TrainArgs),
    /// Score videos and emit spotted intervals.
    Spot(SpotArgs),
    /// Score spotted intervals against annotations.
    Eval(EvalArgs),
    /// Print parameter and FLOP counts of the network.
    ModelCost,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    videos: usize,
    #[arg(long, default_value_t = 5)]
    subjects: usize,
    #[arg(long, default_value_t = 300)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add rigid head-motion transients.
    #[arg(long)]
    jitter: bool,
    /// Unannotated local motions outside the RoIs, per video.
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    #[arg(long, default_value = "syn")]
    prefix: String,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Directory of frame images.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    landmarks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Also write accumulated motion maps.
    #[arg(long)]
    motion_dump: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (see `synth`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpotArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Feature dump of one video.
    #[arg(long, conflicts_with_all = ["frames", "data"])]
    features: Option<PathBuf>,
    /// Frame directory of one video; needs `--landmarks`.
    #[arg(long, requires = "landmarks", conflicts_with = "data")]
    frames: Option<PathBuf>,
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Dataset directory; spots every video.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Video id for single-video input; defaults to the file or directory name.
    #[arg(long)]
    video_id: Option<String>,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long)]
    intervals: PathBuf,
    /// Per-frame scores (single-video input only).
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    intervals: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Per-video, per-subject and total counts as CSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        let Some((k, v)) = o.split_once('=') else {
            bail!(mespot::Error::Config(format!("override {o:?} is not KEY=VALUE")));
        };
        cfg.set(k.trim(), v.trim())?;
    }
    if cli.no_align {
        cfg.run.use_alignment = false;
    }
    if cli.no_roi {
        cfg.run.use_roi = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_synth(a: &SynthArgs, cfg: &Config) -> anyhow::Result<()> {
    let spec = DatasetSpec {
        prefix: a.prefix.clone(),
        videos: a.videos,
        subjects: a.subjects,
        frames: a.frames,
        jitter: a.jitter.then(JitterSpec::default),
        distractors_per_video: (a.distractors, a.distractors),
        seed: a.seed ^ cfg.run.seed,
        ..DatasetSpec::default()
    };
    let videos = synth::gen_dataset(&spec)?;
    dataset::write(&a.out, &videos)?;
    println!("wrote {} videos to {}", videos.len(), a.out.display());
    Ok(())
}

fn run_preprocess(a: &PreprocessArgs, cfg: &Config) -> anyhow::Result<()> {
    let seq = io::load_frame_sequence(&a.frames, a.fps)?;
    let track = io::parse_landmarks(&a.landmarks)?;
    let p = pipeline::preprocess_video(&seq, &track, &cfg.run)?;
    raster::write_features(&a.out, &p.features)?;
    if let Some(path) = &a.motion_dump {
        let motion = pipeline::accumulated_motion(&seq, &track, &cfg.run)?;
        raster::write_motion(path, &motion)?;
    }
    println!("{} feature maps -> {}", p.features.len(), a.out.display());
    println!("{}", p.timings.report());
    Ok(())
}

fn prepare_all(root: &Path, cfg: &Config) -> anyhow::Result<Vec<PreparedVideo>> {
    let ds = dataset::read(root)?;
    ds.into_iter()
        .map(|v| {
            let seq = io::load_frame_sequence(&v.frames_dir, v.fps)?;
            let seq = mespot::io::FrameSequence::new(v.video_id.clone(), v.subject_id.clone(), v.fps, seq.frames().to_vec())?;
            let track = io::parse_landmarks(&v.landmarks)?;
            pipeline::prepare(&seq, &track, v.annotations, &cfg.run)
                .with_context(|| format!("preprocessing {}", v.video_id))
        })
        .collect()
}

fn run_train(a: &TrainArgs, cfg: &Config) -> anyhow::Result<()> {
    let videos = prepare_all(&a.data, cfg)?;
    let refs: Vec<&PreparedVideo> = videos.iter().collect();
    let out = pipeline::train_videos(&refs, cfg)?;
    out.weights.save(&a.out)?;
    for (e, l) in out.loss_trace.iter().enumerate() {
        println!("epoch {e}: loss {l:.6}");
    }
    println!("weights -> {}", a.out.display());
    Ok(())
}

fn run_spot(a: &SpotArgs, cfg: &Config) -> anyhow::Result<()> {
    let weights = Weights::load(&a.weights)?;
    let mut rows: Vec<VideoIntervals> = Vec::new();
    if let Some(root) = &a.data {
        let videos = prepare_all(root, cfg)?;
        let refs: Vec<&PreparedVideo> = videos.iter().collect();
        rows = pipeline::spot_videos(&refs, &weights, &cfg.run)?;
    } else {
        let (video_id, features) = if let Some(f) = &a.features {
            (a.video_id.clone().unwrap_or_else(|| stem(f)), raster::read_features(f)?)
        } else if let (Some(frames), Some(lm)) = (&a.frames, &a.landmarks) {
            let seq = io::load_frame_sequence(frames, a.fps)?;
            let track = io::parse_landmarks(lm)?;
            let start = Instant::now();
            let p = pipeline::preprocess_video(&seq, &track, &cfg.run)?;
            log::info!("preprocessed {} frames in {:.1} ms", seq.len(), start.elapsed().as_secs_f64() * 1e3);
            (a.video_id.clone().unwrap_or(seq.video_id.clone()), p.features)
        } else {
            bail!(mespot::Error::Config("spot needs --features, --frames with --landmarks, or --data".into()));
        };
        let (scores, r) = pipeline::spot_features(&features, &weights, a.fps, &cfg.run)?;
        if let Some(path) = &a.scores {
            io::write_scores(path, cfg.run.k, &scores, &r.smoothed)?;
        }
        rows.extend(r.intervals.into_iter().map(|interval| VideoIntervals {
            video_id: video_id.clone(),
            interval,
        }));
    }
    io::write_intervals(&a.intervals, &rows)?;
    println!("{} intervals -> {}", rows.len(), a.intervals.display());
    Ok(())
}

fn run_eval(a: &EvalArgs, cfg: &Config) -> anyhow::Result<()> {
    let preds = io::parse_intervals(&a.intervals)?;
    let anns = io::parse_annotations(&a.annotations)?;
    let report = evaluate(&preds, &anns, &[], cfg.run.matching, cfg.run.strict_iou)?;
    if let Some(path) = &a.report {
        report.write_csv(path)?;
    }
    print!("{}", report.summary());
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth(a) => run_synth(a, &cfg),
        Command::Preprocess(a) => run_preprocess(a, &cfg),
        Command::Train(a) => run_train(a, &cfg),
        Command::Spot(a) => run_spot(a, &cfg),
        Command::Eval(a) => run_eval(a, &cfg),
        Command::ModelCost => {
            let c = model_cost();
            println!("parameters: {}", c.params);
            println!("forward FLOPs: {} ({:.2}M)", c.flops, c.flops as f64 / 1e6);
            Ok(())
        }
    }
}

/// 1 for configuration problems, 2 for bad input data, 3 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<mespot::Error>()) {
        Some(mespot::Error::Config(_)) => 1,
        Some(mespot::Error::Train(_)) | None => 3,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
