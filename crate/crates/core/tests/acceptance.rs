//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with the
//! measured value and its tolerance, then asserts. Runs with its own `main`
//! so the lines show up without `--nocapture`. A bare argument filters by
//! name, as with the standard harness.

use std::f64::consts::TAU;
use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use mespot::config::Config;
use mespot::eval::{count_matches, f1, MatchStrategy, VideoCounts};
use mespot::io::MEAnnotation;
use mespot::net::{self, model_cost, Weights};
use mespot::phase::phase_difference;
use mespot::pipeline::{self, PreparedVideo};
use mespot::postprocess::{detect_peaks, threshold};
use mespot::pyramid::{laplacian_subband, to_unit_quaternions, RieszFilter, RieszLevel};
use mespot::roi::FeatureMap;
use mespot::synth::{self, DatasetSpec, JitterSpec};
use mespot::train::make_labels;
use mespot::Plane;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("[{}] #{id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn check_time(id: u32, start: Instant, budget: Duration) {
    let took = start.elapsed();
    println!("      #{id} runtime {:.2} s (budget {:.0} s)", took.as_secs_f64(), budget.as_secs_f64());
    assert!(took < budget, "#{id} took {took:?}, budget {budget:?}");
}

fn c01_f1_on_reported_counts() {
    let start = Instant::now();
    let a = f1(&VideoCounts::from_tp_fp_fn(14, 117, 43));
    let b = f1(&VideoCounts::from_tp_fp_fn(30, 171, 129));
    let (sa, sb) = (format!("{:.4}", a.f1), format!("{:.4}", b.f1));
    let pass = sa == "0.1489" && sb == "0.1667";
    report(1, "f1 on 14/117/43 and 30/171/129", pass, &format!("{sa} and {sb} (expected 0.1489 and 0.1667 at 4 dp)"));
    assert!(pass);
    check_time(1, start, Duration::from_secs(1));
}

fn c02_model_cost() {
    let start = Instant::now();
    let c = model_cost();
    let ratio = c.flops as f64 / 0.6e6;
    let pass = c.params == 160_961 && (0.5..=2.0).contains(&ratio) && Weights::init(0).param_count() == c.params;
    report(
        2,
        "model cost",
        pass,
        &format!("{} params (expected 160961), {} FLOPs = {ratio:.3} x 0.6M (allowed 0.5..2)", c.params, c.flops),
    );
    assert!(pass);
    check_time(2, start, Duration::from_secs(1));
}

/// Mean level-1 phase difference `(u, v)` over interior pixels and all frame pairs.
fn mean_phase_step(seq: &[Plane], margin: usize) -> (f64, f64) {
    let filter = RieszFilter::designed();
    let quats: Vec<_> = seq
        .iter()
        .map(|f| {
            let lvl = RieszLevel::new(laplacian_subband(f, 1).unwrap(), &filter);
            let floor = 1e-6 * lvl.max_amplitude();
            to_unit_quaternions(&lvl, floor)
        })
        .collect();
    let (w, h) = seq[0].dims();
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for pair in quats.windows(2) {
        let d = phase_difference(&pair[1], &pair[0]).unwrap();
        for y in margin..h - margin {
            for x in margin..w - margin {
                let k = y * w + x;
                if d.valid[k] {
                    su += d.u[k];
                    sv += d.v[k];
                    n += 1;
                }
            }
        }
    }
    (su / n as f64, sv / n as f64)
}

fn c03_translating_sinusoid_phase_rate() {
    let start = Instant::now();
    let lambda = 16.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_ok = true;
    let mut detail = String::new();
    for v in [0.1, 0.25, 0.5] {
        let s = synth::gen_translating_sinusoid(lambda, v, 0.0, 64, 128, 128).unwrap();
        let (u, vv) = mean_phase_step(s.sequence.frames(), 8);
        let expected = TAU * v / lambda;
        let rel = (u.abs() - expected).abs() / expected;
        // Motion along +x shows up as a negative u step.
        let sign_ok = u < 0.0 && (u - s.expected_step.0).abs() < 0.05 * expected && vv.abs() < 0.05 * expected;
        all_ok &= rel <= 0.05 && sign_ok;
        detail += &format!("v={v}: |u|={:.5} vs {expected:.5} (rel {rel:.4}); ", u.abs());
        xs.push(v);
        ys.push(u.abs());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let pass = all_ok && r2 >= 0.99;
    report(3, "translating sinusoid phase rate", pass, &format!("{detail}R^2 {r2:.5} (need rel <= 0.05, R^2 >= 0.99)"));
    assert!(pass);
    check_time(3, start, Duration::from_secs(30));
}

/// Exact Riesz pair of a periodic image via the FFT, transfer `-i·ω/|ω|`.
fn fft_riesz(img: &Plane) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = img.dims();
    let mut planner = FftPlanner::<f64>::new();
    let (fw, fh) = (planner.plan_fft_forward(w), planner.plan_fft_forward(h));
    let (iw, ih) = (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h));
    let fft2 = |data: &mut Vec<Complex<f64>>, row: &dyn rustfft::Fft<f64>, col: &dyn rustfft::Fft<f64>| {
        for r in data.chunks_exact_mut(w) {
            row.process(r);
        }
        let mut c = vec![Complex::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                c[y] = data[y * w + x];
            }
            col.process(&mut c);
            for y in 0..h {
                data[y * w + x] = c[y];
            }
        }
    };
    let mut spec: Vec<Complex<f64>> = img.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut spec, fw.as_ref(), fh.as_ref());
    let freq = |k: usize, n: usize| TAU * (if k <= n / 2 { k as f64 } else { k as f64 - n as f64 }) / n as f64;
    let mut r1 = spec.clone();
    let mut r2 = spec.clone();
    for y in 0..h {
        for x in 0..w {
            let (wx, wy) = (freq(x, w), freq(y, h));
            let m = wx.hypot(wy);
            let (h1, h2) = if m == 0.0 { (0.0, 0.0) } else { (wx / m, wy / m) };
            let k = y * w + x;
            r1[k] *= Complex::new(0.0, -h1);
            r2[k] *= Complex::new(0.0, -h2);
        }
    }
    fft2(&mut r1, iw.as_ref(), ih.as_ref());
    fft2(&mut r2, iw.as_ref(), ih.as_ref());
    let norm = (w * h) as f64;
    (r1.iter().map(|c| c.re / norm).collect(), r2.iter().map(|c| c.re / norm).collect())
}

fn c04_spatial_riesz_vs_exact() {
    let start = Instant::now();
    let n = 64usize;
    let margin = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        // DFT-grid frequencies with wavelength 4..10 px keep the image periodic.
        let waves: Vec<(f64, f64, f64, f64)> = (0..8)
            .map(|_| loop {
                let kx = rng.gen_range(-16i32..=16) as f64;
                let ky = rng.gen_range(-16i32..=16) as f64;
                let lambda = n as f64 / kx.hypot(ky);
                if (4.0..=10.0).contains(&lambda) {
                    break (TAU * kx / n as f64, TAU * ky / n as f64, rng.gen_range(0.2..1.0), rng.gen_range(0.0..TAU));
                }
            })
            .collect();
        let img = Plane::from_fn(n, n, |x, y| {
            waves.iter().map(|&(a, b, amp, ph)| amp * (a * x as f64 + b * y as f64 + ph).cos()).sum()
        });
        let (e1, e2) = fft_riesz(&img);
        let (s1, s2) = RieszFilter::designed().apply(&img);
        let (mut num, mut den) = (0.0, 0.0);
        for y in margin..n - margin {
            for x in margin..n - margin {
                let k = y * n + x;
                num += (s1.data()[k] - e1[k]).powi(2) + (s2.data()[k] - e2[k]).powi(2);
                den += e1[k].powi(2) + e2[k].powi(2);
            }
        }
        worst = worst.max((num / den).sqrt());
    }
    let pass = worst <= 0.10;
    report(4, "spatial Riesz vs FFT transfer function", pass, &format!("worst interior relative L2 {worst:.4} over 20 images (limit 0.10)"));
    assert!(pass);
    check_time(4, start, Duration::from_secs(30));
}

fn c05_gradient_check() {
    let start = Instant::now();
    let w = Weights::init(17);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<FeatureMap> = (0..4)
        .map(|_| FeatureMap::from_vec((0..FeatureMap::LEN).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap())
        .collect();
    let batch: Vec<(&FeatureMap, f64)> = xs.iter().zip([1.0, 0.0, 0.0, 1.0]).collect();
    let (_, grad) = net::mse_loss_and_grad(&batch, &w);
    // Stratified so every block is exercised.
    let blocks = [(0, 30), (30, 80), (80, 160), (160, 160_160), (160_160, 160_560), (160_560, 160_960), (160_960, 160_961)];
    let per = [14, 14, 14, 22, 14, 21, 1];
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (&(lo, hi), &m) in blocks.iter().zip(&per) {
        for _ in 0..m {
            let i = rng.gen_range(lo..hi);
            let mut wp = w.clone();
            wp.params_mut()[i] += eps;
            let mut wm = w.clone();
            wm.params_mut()[i] -= eps;
            let fd = (net::mse_loss(&batch, &wp) - net::mse_loss(&batch, &wm)) / (2.0 * eps);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
            worst = worst.max(rel);
            count += 1;
        }
    }
    let pass = worst <= 1e-4 && count == 100;
    report(5, "MSE gradient vs central differences", pass, &format!("{count} params, worst relative error {worst:.2e} (limit 1e-4)"));
    assert!(pass);
    check_time(5, start, Duration::from_secs(60));
}

fn dataset(prefix: &str, videos: usize, seed: u64, nuisance: bool) -> Vec<synth::SynthVideo> {
    synth::gen_dataset(&DatasetSpec {
        prefix: prefix.into(),
        videos,
        subjects: videos.min(5),
        frames: 300,
        fps: 30.0,
        event_duration: 12,
        events_per_video: (1, 3),
        jitter: nuisance.then(JitterSpec::default),
        distractors_per_video: if nuisance { (1, 2) } else { (0, 0) },
        seed,
        ..DatasetSpec::default()
    })
    .unwrap()
}

fn train_and_eval(train: &[PreparedVideo], test: &[PreparedVideo], cfg: &Config) -> VideoCounts {
    let t: Vec<&PreparedVideo> = train.iter().collect();
    let out = pipeline::train_videos(&t, cfg).unwrap();
    let e: Vec<&PreparedVideo> = test.iter().collect();
    pipeline::evaluate_videos(&e, &out.weights, &cfg.run).unwrap().total()
}

fn c06_end_to_end_synthetic() {
    let start = Instant::now();
    let cfg = Config::default();
    let train = pipeline::prepare_synth(&dataset("tr", 20, 61, false), &cfg.run).unwrap();
    let test = pipeline::prepare_synth(&dataset("te", 10, 62, false), &cfg.run).unwrap();
    let prep = start.elapsed();
    let c = train_and_eval(&train, &test, &cfg);
    let m = f1(&c);
    let pass = m.f1 >= 0.8;
    report(
        6,
        "end-to-end synthetic spotting",
        pass,
        &format!(
            "F1 {:.4} (P {:.3}, R {:.3}; TP {} FP {} FN {}) at level 3, 10 Hz lowpass, h 0.7 (need >= 0.8); preprocessing {:.1} s",
            m.f1,
            m.precision,
            m.recall,
            c.true_positives,
            c.false_positives(),
            c.false_negatives(),
            prep.as_secs_f64()
        ),
    );
    assert!(pass);
    check_time(6, start, Duration::from_secs(300));
}

/// Strict interior local maxima above `h`, computed independently.
fn oracle_candidates(s: &[f64], h: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..s.len().saturating_sub(1) {
        if s[i] > h && s[i] > s[i - 1] && s[i] > s[i + 1] {
            out.push(i);
        }
    }
    out
}

/// Best admissible peak subset: among all subsets with pairwise spacing at
/// least `d`, the lexicographically largest membership vector when
/// candidates are ranked by height (desc) then index (asc).
fn oracle_peaks(s: &[f64], h: f64, d: usize) -> Vec<usize> {
    let mut cand = oracle_candidates(s, h);
    cand.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    let n = cand.len();
    let mut best: Option<Vec<bool>> = None;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).map(|j| cand[j]).collect();
        let ok = chosen.iter().enumerate().all(|(a, &p)| chosen[a + 1..].iter().all(|&q| p.abs_diff(q) >= d));
        if !ok {
            continue;
        }
        let bits: Vec<bool> = (0..n).map(|j| mask & (1 << j) != 0).collect();
        if best.as_ref().map_or(true, |b| bits > *b) {
            best = Some(bits);
        }
    }
    let mut out: Vec<usize> = best
        .map(|b| (0..n).filter(|&j| b[j]).map(|j| cand[j]).collect())
        .unwrap_or_default();
    out.sort_unstable();
    out
}

fn oracle_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    let inter = if hi > lo { hi - lo } else { 0.0 };
    inter / ((a.1 - a.0) + (b.1 - b.0) - inter)
}

/// Largest number of disjoint (pred, gt) pairs with IoU >= 0.5, by search.
fn oracle_matching(p: &[(f64, f64)], g: &[(f64, f64)], i: usize, used: &mut Vec<bool>) -> usize {
    if i == p.len() {
        return 0;
    }
    let mut best = oracle_matching(p, g, i + 1, used);
    for j in 0..g.len() {
        if !used[j] && oracle_iou(p[i], g[j]) >= 0.5 {
            used[j] = true;
            best = best.max(1 + oracle_matching(p, g, i + 1, used));
            used[j] = false;
        }
    }
    best
}

fn c07_brute_force_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut peak_bad = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(3..=18);
        // Coarse values force ties and plateaus.
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
        let h = threshold(&s, rng.gen_range(0.0..=1.0)).unwrap();
        let d = rng.gen_range(1..=5);
        if detect_peaks(&s, h, d) != oracle_peaks(&s, h, d) {
            peak_bad += 1;
        }
    }

    let mut match_bad = 0;
    let mut greedy_short = 0;
    for _ in 0..1000 {
        let iv = |rng: &mut ChaCha8Rng| {
            let m = rng.gen_range(0..=6);
            (0..m)
                .map(|_| {
                    let a = rng.gen_range(0..40) as f64;
                    (a, a + rng.gen_range(2..14) as f64)
                })
                .collect::<Vec<_>>()
        };
        let p = iv(&mut rng);
        let g = iv(&mut rng);
        let tp = count_matches(&p, &g, MatchStrategy::default(), false).unwrap();
        let exact = oracle_matching(&p, &g, 0, &mut vec![false; g.len()]);
        if tp != exact {
            match_bad += 1;
        }
        if count_matches(&p, &g, MatchStrategy::Greedy, false).unwrap() < exact {
            greedy_short += 1;
        }
    }

    let mut label_bad = 0;
    for _ in 0..100 {
        let t = rng.gen_range(30..200);
        let k = rng.gen_range(1..=10);
        let anns: Vec<MEAnnotation> = (0..rng.gen_range(0..=4))
            .map(|_| {
                let on = rng.gen_range(0..t - 2);
                let off = (on + rng.gen_range(1..30)).min(t - 1);
                MEAnnotation { video_id: "v".into(), subject_id: "s".into(), onset: on, apex: None, offset: off }
            })
            .filter(|a| a.offset > a.onset)
            .collect();
        let got = make_labels(&anns, k, t);
        let want: Vec<u8> = (k..t)
            .map(|i| {
                let w = ((i - k) as f64, i as f64);
                u8::from(anns.iter().any(|a| oracle_iou(w, (a.onset as f64, a.offset as f64)) >= 0.5))
            })
            .collect();
        if got != want {
            label_bad += 1;
        }
    }

    let pass = peak_bad == 0 && match_bad == 0 && label_bad == 0;
    report(
        7,
        "brute-force oracles",
        pass,
        &format!(
            "detect_peaks mismatches {peak_bad}/1000, matching mismatches {match_bad}/1000 (greedy below optimum on {greedy_short}), make_labels mismatches {label_bad}/100 (need 0)"
        ),
    );
    assert!(pass);
    check_time(7, start, Duration::from_secs(60));
}

fn c08_ablation_directions() {
    let start = Instant::now();
    // Jitter and off-RoI motion are test-time nuisances the models never see in training.
    let train_v = dataset("jtr", 20, 81, false);
    let test_v = dataset("jte", 10, 82, true);
    let run = |align: bool, roi: bool| {
        let mut cfg = Config::default();
        cfg.run.use_alignment = align;
        cfg.run.use_roi = roi;
        let tr = pipeline::prepare_synth(&train_v, &cfg.run).unwrap();
        let te = pipeline::prepare_synth(&test_v, &cfg.run).unwrap();
        train_and_eval(&tr, &te, &cfg)
    };
    let aligned = run(true, true);
    let unaligned = run(false, true);
    let full = run(true, false);
    let (fa, fu, ff) = (f1(&aligned).f1, f1(&unaligned).f1, f1(&full).f1);
    let fp_ok = aligned.false_positives() < unaligned.false_positives();
    let roi_ok = fa >= ff;
    report(
        8,
        "ablation directions under jitter and off-RoI motion",
        fp_ok && roi_ok,
        &format!(
            "FP aligned {} vs unaligned {} (need strictly fewer); F1 RoI {fa:.4} vs full image {ff:.4} (need RoI >= full); unaligned F1 {fu:.4}",
            aligned.false_positives(),
            unaligned.false_positives()
        ),
    );
    assert!(fp_ok && roi_ok);
    check_time(8, start, Duration::from_secs(300));
}

fn c09_preprocessing_speed() {
    let start = Instant::now();
    let v = synth::gen_micro_motion_video(&synth::SynthSpec::new("speed", "s", 120, 9)).unwrap();
    let p = pipeline::preprocess_video(&v.sequence, &v.landmarks, &Config::default().run).unwrap();
    let ms = p.timings.per_frame_median_ms();
    let pass = ms <= 60.0;
    let verdict = if ms <= 30.0 { "within 30 ms target" } else { "above 30 ms target, below 60 ms hard limit" };
    report(9, "preprocessing per 224x224 frame", pass, &format!("median {ms:.2} ms/frame, {verdict}; {}", p.timings.report()));
    assert!(pass);
    check_time(9, start, Duration::from_secs(60));
}

fn c10_dataset_scores_note() {
    report(
        10,
        "dataset-level F1",
        true,
        "note only: the restricted spontaneous micro-expression datasets are not available here, so their F1 values are not reproduced; criteria 6 and 8 stand in on synthetic data",
    );
}


fn main() -> ExitCode {
    let cases: [(&str, fn()); 10] = [
        ("c01_f1_on_reported_counts", c01_f1_on_reported_counts),
        ("c02_model_cost", c02_model_cost),
        ("c03_translating_sinusoid_phase_rate", c03_translating_sinusoid_phase_rate),
        ("c04_spatial_riesz_vs_exact", c04_spatial_riesz_vs_exact),
        ("c05_gradient_check", c05_gradient_check),
        ("c06_end_to_end_synthetic", c06_end_to_end_synthetic),
        ("c07_brute_force_oracles", c07_brute_force_oracles),
        ("c08_ablation_directions", c08_ablation_directions),
        ("c09_preprocessing_speed", c09_preprocessing_speed),
        ("c10_dataset_scores_note", c10_dataset_scores_note),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, case) in cases {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        if panic::catch_unwind(case).is_err() {
            failed.push(name);
        }
    }
    println!("acceptance: {} run, {} failed {:?}", ran, failed.len(), failed);
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
