//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities (run with `--nocapture` to see them).
//!
//! Criteria 6-8 share one trained model fixture; criterion 10 drives the
//! `rlens` binary end to end twice and compares output bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;
use std::time::Instant;

use rand::Rng;
use rlens_core::analysis::{normalize_rcq, rcq, rma, rra, CategoryMap};
use rlens_core::attribution::{
    gatr, gatr_with_relevancy, gradient_row_weights, gradient_shap_with, head_mean_positive,
    interpolate_to_waveform, relevancy_update, weighted_row_average, ExplainOptions, Heatmap,
    HeatmapFlags, Method,
};
use rlens_core::metrics::{
    default_n_grid, eer, perturbation_test, Polarity, ScoreSet, ThresholdMode,
};
use rlens_core::model::{
    finite_diff_check, init_params, score_dataset, train, ModelConfig, ModelParams, TrainHyper,
};
use rlens_core::seeding;
use rlens_core::signal::{
    synth_partial, synth_utterance, GeneratorSpec, Label, PartialSpec, RegionLabel, Utterance,
    Waveform,
};

fn pass(criterion: usize, detail: &str) {
    println!("ACCEPTANCE {criterion} PASS - {detail}");
}

// ---------------------------------------------------------------------------
// Shared trained fixture (criteria 6, 7, 8).

struct TrainedFixture {
    params: ModelParams,
    eval_set: Vec<Utterance>,
    heldout_eer: f64,
    train_seconds: f64,
    epochs_run: usize,
}

fn make_split(spec: &GeneratorSpec, n_per_class: usize, seed: u64, tag: &str) -> Vec<Utterance> {
    let mut out = Vec::new();
    for i in 0..n_per_class {
        for (label, short) in [(Label::Bonafide, "b"), (Label::Spoof, "s")] {
            let id = format!("{tag}-{short}{i:04}");
            let mut u = synth_utterance(spec, label, seeding::derive_u64(seed, &[&id])).unwrap();
            u.id = id;
            out.push(u);
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

static FIXTURE: LazyLock<TrainedFixture> = LazyLock::new(|| {
    let spec = GeneratorSpec::default();
    let train_set = make_split(&spec, 150, 11, "train");
    let eval_set = make_split(&spec, 100, 22, "eval");
    let config = ModelConfig::default();
    let hyper = TrainHyper::default();

    // Single-threaded pool so the wall-clock bound is honest.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let (params, log, _) =
        pool.install(|| train(&train_set, &eval_set, &config, &hyper, 7).unwrap());
    let train_seconds = start.elapsed().as_secs_f64();
    TrainedFixture {
        params,
        eval_set,
        heldout_eer: log.heldout_eer_percent,
        train_seconds,
        epochs_run: log.epochs.len(),
    }
});

// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_gradient_oracle() {
    let start = Instant::now();
    let report = finite_diff_check(&ModelConfig::micro(), 12, 1e-4).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(
        report.max_rel_error < 1e-4,
        "max relative error {} (per surface: {:?})",
        report.max_rel_error,
        report.surfaces
    );
    assert!(secs < 60.0, "finite-difference sweep took {secs:.1}s");
    pass(1, &format!("max rel err {:.2e} in {secs:.1}s", report.max_rel_error));
}

#[test]
fn acceptance_02_relevancy_unit_algebra() {
    let tol = 1e-12;
    // relevancy_update: R = I, single head, abar = [[0.1,0.2],[0.3,0.4]].
    let r = vec![1.0, 0.0, 0.0, 1.0];
    let out = relevancy_update(&r, &[1.0; 4], &[0.1, 0.2, 0.3, 0.4], 1, 2).unwrap();
    for (a, b) in out.iter().zip([1.1, 0.2, 0.3, 1.4]) {
        assert!((a - b).abs() < tol);
    }
    // Zero gradient and all-negative product leave R unchanged.
    let same = relevancy_update(&r, &[0.5; 4], &[0.0; 4], 1, 2).unwrap();
    assert_eq!(same, r);
    let clamped = relevancy_update(&r, &[0.5; 4], &[-1.0, -2.0, -3.0, -4.0], 1, 2).unwrap();
    assert_eq!(clamped, r);

    // gradient_row_weights: rows [3,4] / [0,0] -> [5, 0]; head cancellation.
    let w = gradient_row_weights(&[3.0, 4.0, 0.0, 0.0], 1, 2).unwrap();
    assert!((w[0] - 5.0).abs() < tol && w[1].abs() < tol);
    let cancel =
        gradient_row_weights(&[1.0, -2.0, 3.0, -4.0, -1.0, 2.0, -3.0, 4.0], 2, 2).unwrap();
    assert!(cancel.iter().all(|&v| v.abs() < tol));

    // weighted_row_average: uniform, one-hot, and the [1,3] example.
    let eye = vec![1.0, 0.0, 0.0, 1.0];
    let (mean, _) = weighted_row_average(&eye, &[2.0, 2.0], 2).unwrap();
    assert!((mean[0] - 0.5).abs() < tol && (mean[1] - 0.5).abs() < tol);
    let (row1, _) = weighted_row_average(&[1.0, 2.0, 3.0, 4.0], &[0.0, 1.0], 2).unwrap();
    assert!((row1[0] - 3.0).abs() < tol && (row1[1] - 4.0).abs() < tol);
    let (wavg, _) = weighted_row_average(&eye, &[1.0, 3.0], 2).unwrap();
    assert!((wavg[0] - 0.25).abs() < tol && (wavg[1] - 0.75).abs() < tol);

    pass(2, "all hand-computed examples exact within 1e-12");
}

#[test]
fn acceptance_03_gatr_invariant_suite() {
    let mut checked = 0usize;
    for seed in 0..200u64 {
        let mut config = ModelConfig::micro();
        config.layers = 1 + (seed % 3) as usize;
        let params = init_params(&config, seed);
        let t = 64usize << (seed % 2) as usize;
        let mut rng = seeding::substream(seed, &["acc3"]);
        let samples: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = Waveform::new(samples, 4000);
        let class = (seed % 2) as usize;

        let (heatmap, states) =
            gatr_with_relevancy(&params, &w, class, &ExplainOptions::default()).unwrap();
        assert_eq!(heatmap.len(), t);
        assert!(heatmap.scores.iter().all(|&v| v >= 0.0), "seed {seed}");

        let s = t / config.total_stride();
        let mut prev = vec![0.0; s * s];
        for i in 0..s {
            prev[i * s + i] = 1.0;
        }
        for state in &states {
            for (a, b) in state.iter().zip(&prev) {
                assert!(a >= b, "relevancy decreased at seed {seed}");
            }
            prev.clone_from(state);
        }
        checked += 1;
    }

    // Single-layer reduction identity against an independent recomputation.
    let mut identity_checked = 0usize;
    for seed in 0..20u64 {
        let config = ModelConfig::micro();
        let params = init_params(&config, seed + 1000);
        let mut rng = seeding::substream(seed, &["acc3-n1"]);
        let samples: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = Waveform::new(samples, 4000);
        let (heatmap, _) =
            gatr_with_relevancy(&params, &w, 1, &ExplainOptions::default()).unwrap();

        let (trace, _) = rlens_core::model::forward(&params, &w).unwrap();
        let (grad, _) = rlens_core::model::backward_from_class(
            &params,
            &trace,
            1,
            rlens_core::model::ScoreTarget::Logit,
        )
        .unwrap();
        let s = trace.tokens;
        let abar =
            head_mean_positive(trace.attention(0), &grad.d_attn[0], config.heads, s).unwrap();
        let weights = gradient_row_weights(&grad.d_attn[0], config.heads, s).unwrap();
        let (rvec, _) = weighted_row_average(&abar, &weights, s).unwrap();
        let expect = interpolate_to_waveform(&rvec, 64, config.total_stride());
        for (a, b) in heatmap.scores.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
        }
        identity_checked += 1;
    }
    pass(
        3,
        &format!("{checked} random pairs non-negative/monotone, {identity_checked} N=1 identities within 1e-9"),
    );
}

#[test]
fn acceptance_04_gradient_shap_linear_exactness() {
    let mut rng = seeding::substream(99, &["acc4"]);
    let mut checked = 0usize;
    for case in 0..100u64 {
        let n = rng.random_range(4..64usize);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        for samples in [1usize, 7, 20] {
            let out = gradient_shap_with(|_| Ok(c.clone()), &w, samples, case).unwrap();
            for i in 0..n {
                let expect = (c[i] * w[i]).max(0.0);
                assert!(
                    (out[i] - expect).abs() < 1e-9,
                    "case {case} M={samples} i={i}: {} vs {expect}",
                    out[i]
                );
            }
        }
        checked += 1;
    }
    pass(4, &format!("{checked} random linear models exact within 1e-9 for M in {{1,7,20}}"));
}

// Independent EER oracle: recount both error rates at every candidate
// threshold (O(n^2)) and interpolate at the first sign crossing.
fn brute_force_eer(scores: &[f64], is_spoof: &[bool]) -> f64 {
    let mut cands: Vec<f64> = scores.to_vec();
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cands.dedup();
    let rates = |theta: f64| {
        let (mut fp, mut bona, mut miss, mut spoof) = (0usize, 0usize, 0usize, 0usize);
        for (&s, &sp) in scores.iter().zip(is_spoof) {
            if sp {
                spoof += 1;
                if s < theta {
                    miss += 1;
                }
            } else {
                bona += 1;
                if s >= theta {
                    fp += 1;
                }
            }
        }
        (fp as f64 / bona as f64, miss as f64 / spoof as f64)
    };
    let hi = cands[cands.len() - 1] + 1.0;
    let (mut pf, mut pm) = rates(cands[0] - 1.0);
    for &theta in cands.iter().chain(std::iter::once(&hi)) {
        let (f, m) = rates(theta);
        if m >= f {
            if (m - f) == 0.0 {
                return 100.0 * f;
            }
            let pd = pm - pf;
            let alpha = -pd / ((m - f) - pd);
            return 100.0 * (pf + alpha * (f - pf));
        }
        pf = f;
        pm = m;
    }
    50.0
}

#[test]
fn acceptance_05_eer_oracle() {
    let mut rng = seeding::substream(5, &["acc5"]);
    let mut worst = 0.0f64;
    for case in 0..500usize {
        let n_bona = rng.random_range(1..32usize);
        let n_spoof = rng.random_range(1..=(64 - n_bona).min(32));
        let mut scores = Vec::new();
        let mut is_spoof = Vec::new();
        for _ in 0..n_bona {
            let v: f64 = rng.random_range(0.0..1.0);
            // Occasional ties exercise the tie handling.
            scores.push(if rng.random_range(0.0..1.0) < 0.3 {
                (v * 10.0).round() / 10.0
            } else {
                v
            });
            is_spoof.push(false);
        }
        for _ in 0..n_spoof {
            let v: f64 = rng.random_range(0.0..1.0);
            scores.push(if rng.random_range(0.0..1.0) < 0.3 {
                (v * 10.0).round() / 10.0
            } else {
                v
            });
            is_spoof.push(true);
        }
        let got = eer(&ScoreSet {
            scores: scores.clone(),
            is_spoof: is_spoof.clone(),
        })
        .unwrap()
        .eer_percent;
        let want = brute_force_eer(&scores, &is_spoof);
        let diff = (got - want).abs();
        worst = worst.max(diff);
        assert!(diff <= 0.5, "case {case}: interpolated {got} vs oracle {want}");
    }

    // Exact corner cases.
    let perfect = eer(&ScoreSet {
        scores: vec![0.9, 0.8, 0.1, 0.2],
        is_spoof: vec![true, true, false, false],
    })
    .unwrap();
    assert_eq!(perfect.eer_percent, 0.0);
    assert!(!perfect.inverted);
    let flipped = eer(&ScoreSet {
        scores: vec![0.1, 0.2, 0.8, 0.9],
        is_spoof: vec![true, true, false, false],
    })
    .unwrap();
    assert_eq!(flipped.eer_percent, 100.0);
    assert!(flipped.inverted);

    pass(5, &format!("500 random sets within 0.5pp of sweep oracle (worst {worst:.3}pp); corner cases exact"));
}

#[test]
fn acceptance_06_trained_model_reaches_low_eer() {
    let fx = &*FIXTURE;
    assert!(
        fx.heldout_eer < 5.0,
        "held-out EER {}% (>= 5%)",
        fx.heldout_eer
    );
    assert!(fx.epochs_run <= 20, "{} epochs exceeds schedule", fx.epochs_run);
    assert!(
        fx.train_seconds < 300.0,
        "training took {:.1}s single-threaded",
        fx.train_seconds
    );
    pass(
        6,
        &format!(
            "held-out EER {:.3}% after {} epochs in {:.1}s single-threaded",
            fx.heldout_eer, fx.epochs_run, fx.train_seconds
        ),
    );
}

#[test]
fn acceptance_07_directional_faithfulness() {
    let fx = &*FIXTURE;
    assert!(fx.eval_set.len() >= 200);
    let opts = ExplainOptions::default();
    let heatmaps: Vec<Heatmap> = fx
        .eval_set
        .iter()
        .map(|u| gatr(&fx.params, &u.waveform, u.label.class_index(), &opts).unwrap())
        .collect();
    let grid = default_n_grid();
    let run = |maps: &[Heatmap], polarity, seed| {
        perturbation_test(
            &fx.params,
            &fx.eval_set,
            maps,
            polarity,
            &grid,
            seed,
            ThresholdMode::FreshPerFraction,
        )
        .unwrap()
        .auc
    };
    let auc_pos = run(&heatmaps, Polarity::Positive, 5);
    let auc_neg = run(&heatmaps, Polarity::Negative, 5);
    let gatr_gap = auc_pos - auc_neg;
    assert!(
        gatr_gap > 0.0,
        "positive AUC {auc_pos} not above negative {auc_neg}"
    );

    // Monte-Carlo: random heatmaps must not show a comparable gap.
    let mut gaps = Vec::with_capacity(20);
    for mc in 0..20u64 {
        let random_maps: Vec<Heatmap> = fx
            .eval_set
            .iter()
            .map(|u| {
                let mut rng = seeding::substream(mc, &["acc7-random", &u.id]);
                Heatmap {
                    scores: (0..u.waveform.len())
                        .map(|_| rng.random_range(0.0..1.0))
                        .collect(),
                    method: Method::Gatr,
                    class: 1,
                    flags: HeatmapFlags::default(),
                }
            })
            .collect();
        let p = run(&random_maps, Polarity::Positive, 1000 + mc);
        let n = run(&random_maps, Polarity::Negative, 1000 + mc);
        gaps.push((p - n).abs());
    }
    let mean_random_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(
        mean_random_gap < gatr_gap,
        "random-heatmap mean |gap| {mean_random_gap} not below GATR gap {gatr_gap}"
    );
    pass(
        7,
        &format!(
            "AUC pos {auc_pos:.2} > neg {auc_neg:.2} on {} utterances; random mean |gap| {mean_random_gap:.2} < {gatr_gap:.2}",
            fx.eval_set.len()
        ),
    );
}

#[test]
fn acceptance_08_partial_spoof_localization() {
    let fx = &*FIXTURE;
    let pspec = PartialSpec::default();
    let gspec = GeneratorSpec::default();

    let mut split: Vec<Utterance> = (0..140)
        .map(|i| {
            let id = format!("part-m{i:04}");
            let mut u = synth_partial(&pspec, seeding::derive_u64(33, &[&id])).unwrap();
            u.id = id;
            u
        })
        .collect();
    for i in 0..60 {
        let id = format!("part-b{i:04}");
        let mut u =
            synth_utterance(&gspec, Label::Bonafide, seeding::derive_u64(33, &[&id])).unwrap();
        u.id = id;
        split.push(u);
    }

    let scores = score_dataset(&fx.params, &split).unwrap();
    let threshold = eer(&ScoreSet {
        scores: scores.clone(),
        is_spoof: split.iter().map(|u| u.label.is_spoof()).collect(),
    })
    .unwrap()
    .threshold;

    let mut n = 0usize;
    let (mut rma_sum, mut rra_sum, mut baseline_sum) = (0.0, 0.0, 0.0);
    for (u, &score) in split.iter().zip(&scores) {
        if u.label != Label::Partial || score < threshold {
            continue;
        }
        let h = gatr(&fx.params, &u.waveform, 1, &ExplainOptions::default()).unwrap();
        let gt: Vec<bool> = u
            .regions
            .as_ref()
            .unwrap()
            .iter()
            .map(|&r| r == RegionLabel::Sr)
            .collect();
        if let (Some(m), Some(r)) = (rma(&h.scores, &gt), rra(&h.scores, &gt)) {
            n += 1;
            rma_sum += m;
            rra_sum += r;
            baseline_sum += gt.iter().filter(|&&g| g).count() as f64 / gt.len() as f64;
        }
    }
    assert!(n >= 100, "only {n} partial utterances predicted spoof");
    let mean_rma = rma_sum / n as f64;
    let mean_rra = rra_sum / n as f64;
    // Uniform-heatmap baseline: RMA equals the SR fraction, and a random
    // ranking has the same expected RRA.
    let baseline = baseline_sum / n as f64;
    assert!(
        mean_rma >= baseline + 0.05,
        "RMA {mean_rma} vs baseline {baseline}"
    );
    assert!(
        mean_rra >= baseline + 0.05,
        "RRA {mean_rra} vs baseline {baseline}"
    );
    pass(
        8,
        &format!("{n} predicted-spoof partials: RMA {mean_rma:.3}, RRA {mean_rra:.3} vs baseline {baseline:.3} (+0.05 required)"),
    );
}

#[test]
fn acceptance_09_rcq_identities() {
    let mut rng = seeding::substream(9, &["acc9"]);
    // Count-weighted mean of RCQ vanishes on random inputs.
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n_utts = rng.random_range(1..6usize);
        let data: Vec<(Heatmap, CategoryMap)> = (0..n_utts)
            .map(|_| {
                let t = rng.random_range(8..64usize);
                let scores: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
                let labels: Vec<u8> = (0..t).map(|_| rng.random_range(0..4u8)).collect();
                (
                    Heatmap {
                        scores,
                        method: Method::Gatr,
                        class: 1,
                        flags: HeatmapFlags::default(),
                    },
                    CategoryMap::new(
                        labels,
                        vec!["A".into(), "B".into(), "C".into(), "D".into()],
                    )
                    .unwrap(),
                )
            })
            .collect();
        let pairs: Vec<(&Heatmap, &CategoryMap)> = data.iter().map(|(h, c)| (h, c)).collect();
        let report = rcq(&pairs, "all").unwrap();
        let total: u64 = report.entries.iter().map(|e| e.count).sum();
        let weighted_mean = report
            .entries
            .iter()
            .map(|e| e.count as f64 * e.rcq)
            .sum::<f64>()
            / total as f64;
        worst = worst.max(weighted_mean.abs());
        assert!(weighted_mean.abs() < 1e-9, "weighted mean {weighted_mean}");
    }

    // Uniform heatmap: every RCQ is zero.
    let uniform = Heatmap {
        scores: vec![0.6; 12],
        method: Method::Gatr,
        class: 1,
        flags: HeatmapFlags::default(),
    };
    let cats = CategoryMap::new(
        vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2],
        vec!["A".into(), "B".into(), "C".into()],
    )
    .unwrap();
    let report = rcq(&[(&uniform, &cats)], "all").unwrap();
    assert!(report.entries.iter().all(|e| e.rcq.abs() < 1e-9));

    // Worked example: scores [1,1,0,0] over [A,A,B,B] -> {100, -100}, and
    // normalization maps them onto {1, -1}.
    let h = Heatmap {
        scores: vec![1.0, 1.0, 0.0, 0.0],
        method: Method::Gatr,
        class: 1,
        flags: HeatmapFlags::default(),
    };
    let c = CategoryMap::new(vec![0, 0, 1, 1], vec!["A".into(), "B".into()]).unwrap();
    let mut report = rcq(&[(&h, &c)], "all").unwrap();
    assert_eq!(report.entries[0].rcq, 100.0);
    assert_eq!(report.entries[1].rcq, -100.0);
    normalize_rcq(&mut report);
    assert_eq!(report.entries[0].normalized, Some(1.0));
    assert_eq!(report.entries[1].normalized, Some(-1.0));

    pass(9, &format!("count-weighted mean zero (worst {worst:.1e}), uniform zero, worked example exact"));
}

// ---------------------------------------------------------------------------
// Criteria 10 and 11 drive the binary.

fn rlens(args: &[&str], cwd: &Path) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rlens"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "rlens {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const PIPELINE_GEN: &str = r#"{
  "generator": {"num_samples": 2000},
  "counts": {"train_bonafide": 20, "train_spoof": 20,
             "eval_bonafide": 12, "eval_spoof": 12,
             "partial_bonafide": 8, "partial_mixed": 12}
}"#;

const PIPELINE_TRAIN: &str = r#"{"hyper": {"epochs": 5}}"#;

/// gen -> train -> explain (all methods) -> eval (both manifests) -> report.
fn run_pipeline(root: &Path, threads: usize) {
    let t = threads.to_string();
    fs::create_dir_all(root).unwrap();
    fs::write(root.join("gen.json"), PIPELINE_GEN).unwrap();
    fs::write(root.join("train.json"), PIPELINE_TRAIN).unwrap();
    rlens(
        &["--threads", &t, "gen", "--out", "data", "--seed", "21", "--config", "gen.json"],
        root,
    );
    rlens(
        &[
            "--threads", &t, "train",
            "--manifest", "data/train/manifest.json",
            "--heldout", "data/eval/manifest.json",
            "--out", "model", "--config", "train.json", "--seed", "4",
        ],
        root,
    );
    for (method, manifest, outdir) in [
        ("gatr", "data/eval/manifest.json", "heat/eval/gatr"),
        ("gradcam", "data/eval/manifest.json", "heat/eval/gradcam"),
        ("gradshap", "data/eval/manifest.json", "heat/eval/gradshap"),
        ("gatr", "data/partial/manifest.json", "heat/partial/gatr"),
        ("gradcam", "data/partial/manifest.json", "heat/partial/gradcam"),
        ("gradshap", "data/partial/manifest.json", "heat/partial/gradshap"),
    ] {
        rlens(
            &[
                "--threads", &t, "explain",
                "--checkpoint", "model/model.ckpt",
                "--manifest", manifest,
                "--method", method, "--out", outdir, "--seed", "6",
            ],
            root,
        );
    }
    rlens(
        &[
            "--threads", &t, "eval",
            "--checkpoint", "model/model.ckpt",
            "--manifest", "data/eval/manifest.json",
            "--heatmaps", "heat/eval/gatr",
            "--heatmaps", "heat/eval/gradcam",
            "--heatmaps", "heat/eval/gradshap",
            "--out", "reports/eval",
            "--which", "faithfulness,perturbation,rcq",
            "--seed", "8",
        ],
        root,
    );
    rlens(
        &[
            "--threads", &t, "eval",
            "--checkpoint", "model/model.ckpt",
            "--manifest", "data/partial/manifest.json",
            "--heatmaps", "heat/partial/gatr",
            "--heatmaps", "heat/partial/gradcam",
            "--heatmaps", "heat/partial/gradshap",
            "--out", "reports/partial",
            "--which", "partial",
            "--seed", "8",
        ],
        root,
    );
    rlens(
        &[
            "--threads", &t, "report",
            "--rcq", "reports/eval/rcq_report.csv",
            "--out", "reports/rcq_chart.svg",
        ],
        root,
    );
}

fn collect_outputs(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(
                path.extension().and_then(|e| e.to_str()),
                Some("csv") | Some("svg")
            ) {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

static PIPELINE: LazyLock<(tempfile::TempDir, PathBuf, PathBuf)> = LazyLock::new(|| {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("run_a");
    let b = dir.path().join("run_b");
    run_pipeline(&a, 1);
    run_pipeline(&b, 2);
    (dir, a, b)
});

#[test]
fn acceptance_10_pipeline_determinism() {
    let (_, a, b) = &*PIPELINE;
    let out_a = collect_outputs(a);
    let out_b = collect_outputs(b);
    assert!(!out_a.is_empty());
    assert_eq!(
        out_a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        out_b.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "output file sets differ"
    );
    for ((name, bytes_a), (_, bytes_b)) in out_a.iter().zip(&out_b) {
        assert_eq!(bytes_a, bytes_b, "{name} differs between --threads 1 and 2");
    }
    pass(
        10,
        &format!(
            "{} CSV/SVG outputs bit-identical across --threads 1 vs 2",
            out_a.len()
        ),
    );
}

#[test]
fn acceptance_11_table_shape_parity() {
    let (_, a, _) = &*PIPELINE;
    let table1 = fs::read_to_string(a.join("reports/eval/table1.csv")).unwrap();
    let mut lines = table1.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,auc_pos,auc_neg,ai,ad,ag,fid_in",
        "table1 columns"
    );
    let methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, vec!["gatr", "gradcam", "gradshap"]);

    let table2 = fs::read_to_string(a.join("reports/partial/table2.csv")).unwrap();
    let mut lines = table2.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,rcq_br,rcq_sr,rma,rra",
        "table2 columns"
    );
    let methods: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, vec!["gatr", "gradcam", "gradshap"]);
    pass(11, "table1 and table2 column structure verified for all three methods");
}
