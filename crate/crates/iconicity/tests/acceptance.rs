//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured values, then asserts.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use iconicity_core::eval::{equal_count_bins, linear_probe, roc, spearman, tpr_at_fpr};
use iconicity_core::gradcheck::random_grad_check;
use iconicity_core::loss::{pair_loss, pair_loss_grad};
use iconicity_core::pooling::{
    media_average, plain_average, quality_pool, quality_weights, verify_protocol, Pooling,
};
use iconicity_core::protocol::{build_protocol, ProtocolConfig};
use iconicity_core::synth::{generate, DEGRADATION};
use iconicity_core::train::{score_dataset, train};
use iconicity_core::{
    Dataset, DegradationMode, EmbeddingRecord, Label, MlpConfig, SynthConfig, Template, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // Written to the raw handle so the line shows without --nocapture.
    let _ = writeln!(
        std::io::stderr(),
        "acceptance {id} [{verdict}] {name}: {detail}"
    );
}

fn all_identities(ds: &Dataset) -> BTreeSet<String> {
    ds.identity_index().keys().cloned().collect()
}

#[test]
fn c1_gradient_matches_finite_differences() {
    let start = Instant::now();
    let configs = [
        MlpConfig::new(16, vec![16, 8, 4, 2, 1]),
        MlpConfig::new(8, vec![12, 6, 3, 2, 1]),
    ];
    let mut worst = 0.0f64;
    for config in &configs {
        for seed in 0..10 {
            worst = worst.max(random_grad_check(seed, config).unwrap().max_relative_error);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-5 && elapsed < Duration::from_secs(10);
    report(
        1,
        "gradient check, 10 seeds x 2 widths, h=1e-6",
        pass,
        &format!("max rel err {worst:.3e}, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn c2_descent_moves_product_as_tabulated() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eta = 0.01;
    // (type, label, cosine sign, expect decrement)
    let types = [
        ("I", Label::Positive, -1.0, true),
        ("II", Label::Negative, 1.0, true),
        ("III", Label::Positive, 1.0, false),
        ("IV", Label::Negative, -1.0, false),
    ];
    let mut violations = 0;
    let draws = 2000;
    for (_, y, sign, decrement) in types {
        for _ in 0..draws {
            let r1 = rng.random_range(1e-9..1.0);
            let r2 = rng.random_range(1e-9..1.0);
            let c = sign * rng.random_range(1e-9..=1.0);
            let p = r1 * r2 * c;
            // Margin putting the hinge on its active side; type IV is only
            // active for a negative margin.
            let margin = match (y, decrement) {
                (Label::Positive, _) => 1.0,
                (Label::Negative, true) => 0.5 * p,
                (Label::Negative, false) => -1.0,
            };
            assert!(pair_loss(r1, r2, c, y, margin) > 0.0);
            let (g1, g2) = pair_loss_grad(r1, r2, c, y, margin);
            let after = (r1 - eta * g1) * (r2 - eta * g2);
            let ok = if decrement {
                after < r1 * r2
            } else {
                after > r1 * r2
            };
            violations += usize::from(!ok);
        }
    }
    let pass = violations == 0;
    report(
        2,
        "descent direction per pair type",
        pass,
        &format!("{violations} violations over 4 x {draws} draws"),
    );
    assert!(pass);
}

#[test]
fn c3_synthetic_iconicity_recovery() {
    let start = Instant::now();
    let ds = generate(&SynthConfig {
        num_identities: 60,
        images_per_identity: 30,
        dimension: 32,
        mode: DegradationMode::Continuous,
        ..SynthConfig::default()
    })
    .unwrap();
    let config = TrainConfig {
        n_pos: 2000,
        n_neg: 2000,
        epochs: 30,
        ..TrainConfig::default()
    };
    let outcome = train(&ds, &all_identities(&ds), &config).unwrap();
    let scores = score_dataset(&outcome.params, &ds).unwrap();
    let elapsed = start.elapsed();
    let delta: Vec<f64> = ds
        .records()
        .iter()
        .map(|r| r.covariate(DEGRADATION).unwrap())
        .collect();
    let quality: Vec<f64> = delta.iter().map(|d| 1.0 - d).collect();
    let rho = spearman(&scores, &quality).unwrap();
    let bins = equal_count_bins(&delta, &scores, 5).unwrap();
    let decreasing = bins.len() == 5 && bins.mean_score.windows(2).all(|w| w[0] > w[1]);
    let pass = rho > 0.8 && decreasing && elapsed < Duration::from_secs(120);
    let means: Vec<String> = bins.mean_score.iter().map(|m| format!("{m:.6}")).collect();
    report(
        3,
        "synthetic recovery, spearman > 0.8 and decreasing bins",
        pass,
        &format!(
            "spearman {rho:.4}, bin means [{}], {elapsed:.1?}",
            means.join(", ")
        ),
    );
    assert!(pass);
}

fn tpr_at_1e2(
    ds: &Dataset,
    templates: &[Template],
    matches: &[iconicity_core::pooling::Match],
    pooling: Pooling<'_>,
) -> f64 {
    let scored = verify_protocol(templates, matches, ds, pooling).unwrap();
    let pairs: Vec<(f64, bool)> = scored.iter().map(|m| (m.similarity, m.genuine)).collect();
    tpr_at_fpr(&roc(&pairs).unwrap(), &[1e-2])[0].tpr
}

#[test]
fn c4_quality_pooling_is_no_worse_than_averaging() {
    let tol = 0.01;
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in 0..5u64 {
        let ds = generate(&SynthConfig {
            seed,
            num_identities: 220,
            images_per_identity: 40,
            ..SynthConfig::default()
        })
        .unwrap();
        let protocol = build_protocol(
            &ds,
            &ProtocolConfig {
                seed,
                ..ProtocolConfig::default()
            },
        )
        .unwrap();
        let config = TrainConfig {
            seed,
            n_pos: 2000,
            n_neg: 2000,
            epochs: 30,
            ..TrainConfig::default()
        };
        let learned = score_dataset(
            &train(&ds, &all_identities(&ds), &config).unwrap().params,
            &ds,
        )
        .unwrap();
        let oracle: Vec<f64> = ds
            .records()
            .iter()
            .map(|r| 1.0 - r.covariate(DEGRADATION).unwrap())
            .collect();
        let lambda = iconicity_core::pooling::DEFAULT_LAMBDA;
        let (t, m) = (&protocol.templates, &protocol.matches);
        let q = tpr_at_1e2(
            &ds,
            t,
            m,
            Pooling::Quality {
                scores: &learned,
                lambda,
            },
        );
        let p = tpr_at_1e2(&ds, t, m, Pooling::PlainAverage);
        let o = tpr_at_1e2(
            &ds,
            t,
            m,
            Pooling::Quality {
                scores: &oracle,
                lambda,
            },
        );
        pass &= q >= p - tol && o >= q - tol && o >= p - tol;
        lines.push(format!(
            "seed {seed}: learned {q:.3} plain {p:.3} oracle {o:.3}"
        ));
    }
    report(
        4,
        "TPR@FPR=1e-2, 8-member templates with 3 junk",
        pass,
        &lines.join("; "),
    );
    assert!(pass);
}

#[test]
fn c5_roc_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=1000);
        let levels = rng.random_range(1..=n);
        let mut scores: Vec<(f64, bool)> = (0..n)
            .map(|_| {
                (
                    f64::from(rng.random_range(0..levels as u32)) / levels as f64,
                    rng.random_bool(0.3),
                )
            })
            .collect();
        scores[0].1 = true;
        scores[1].1 = false;
        let curve = roc(&scores).unwrap();
        let g = scores.iter().filter(|s| s.1).count();
        let i = n - g;
        let mut thresholds: Vec<f64> = scores.iter().map(|s| s.0).collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        let mut expected: Vec<(f64, usize, usize)> = thresholds
            .iter()
            .map(|&t| {
                let tp = scores.iter().filter(|(s, gen)| *gen && *s >= t).count();
                let fp = scores.iter().filter(|(s, gen)| !*gen && *s >= t).count();
                (t, tp, fp)
            })
            .collect();
        expected.push((f64::INFINITY, 0, 0));
        let same = curve.points.len() == expected.len()
            && curve.points.iter().zip(&expected).all(|(p, &(t, tp, fp))| {
                p.threshold == t
                    && p.true_accepts == tp
                    && p.false_accepts == fp
                    && p.tpr.to_bits() == (tp as f64 / g as f64).to_bits()
                    && p.fpr.to_bits() == (fp as f64 / i as f64).to_bits()
            });
        mismatches += usize::from(!same);
    }
    let pass = mismatches == 0;
    report(
        5,
        "ROC vs threshold enumeration, 100 trials up to 1000 scores",
        pass,
        &format!("{mismatches} mismatching trials"),
    );
    assert!(pass);
}

#[test]
fn c6_pooling_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut lambda0, mut media, mut sum, mut shift) = (0.0f64, 0usize, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let size = rng.random_range(1..=12);
        let dim = rng.random_range(2..=16);
        let records: Vec<EmbeddingRecord> = (0..size)
            .map(|k| {
                let v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                EmbeddingRecord::new(format!("i{k}"), "id", format!("m{k}"), v)
            })
            .collect();
        let ds = Dataset::new(dim, records).unwrap();
        let t = Template::new("t", (0..size).collect());
        let scores: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0)).collect();
        let plain = plain_average(&t, &ds).unwrap();
        let q0 = quality_pool(&t, &ds, &scores, 0.0).unwrap();
        for (a, b) in q0.vector.iter().zip(&plain.vector) {
            lambda0 = lambda0.max((a - b).abs());
        }
        media += usize::from(media_average(&t, &ds).unwrap().vector != plain.vector);
        let lambda = rng.random_range(-20.0..20.0);
        let w = quality_weights(&scores, lambda).unwrap();
        sum = sum.max((w.iter().sum::<f64>() - 1.0).abs());
        let c = rng.random_range(-50.0..50.0);
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        for (a, b) in w.iter().zip(quality_weights(&shifted, lambda).unwrap()) {
            shift = shift.max((a - b).abs());
        }
    }
    let pass = lambda0 <= 1e-12 && media == 0 && sum <= 1e-12 && shift <= 1e-12;
    report(
        6,
        "pooling identities over 1000 random templates",
        pass,
        &format!("lambda=0 gap {lambda0:.1e}, media!=plain {media}, |sum-1| {sum:.1e}, shift gap {shift:.1e}"),
    );
    assert!(pass);
}

fn cli(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_iconicity"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn c7_pipeline_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen_cfg = "seed=7\nidentities=40\nimages=20\nmode=continuous\n";
    let train_cfg = "seed=7\nepochs=3\nn_pos=1000\nn_neg=1000\n";
    fs::write(d.join("gen.cfg"), gen_cfg).unwrap();
    fs::write(d.join("train.cfg"), train_cfg).unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        cli(d, &["gen", "--config", "gen.cfg", "--out", "ds.csv"]);
        cli(
            d,
            &[
                "train",
                "--config",
                "train.cfg",
                "--data",
                "ds.csv",
                "--model-out",
                "model.json",
            ],
        );
        cli(
            d,
            &[
                "score",
                "--data",
                "ds.csv",
                "--model",
                "model.json",
                "--out",
                "scores.csv",
            ],
        );
        runs.push(fs::read(d.join("scores.csv")).unwrap());
    }
    let pass = runs[0] == runs[1] && !runs[0].is_empty();
    report(
        7,
        "gen -> train -> score twice, same seed",
        pass,
        &format!("{} bytes, identical: {}", runs[0].len(), runs[0] == runs[1]),
    );
    assert!(pass);
}

#[test]
fn c8_linear_probe_calibration() {
    let ds = generate(&SynthConfig {
        num_identities: 50,
        images_per_identity: 20,
        ..SynthConfig::default()
    })
    .unwrap();
    let features: Vec<&[f64]> = ds.records().iter().map(|r| r.vector.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w: Vec<f64> = (0..ds.dimension())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let linear: Vec<f64> = features
        .iter()
        .map(|f| 0.25 + f.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let clean = linear_probe(&features, &linear, 0, 0.7)
        .unwrap()
        .relative_error;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..20u64 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let noise: Vec<f64> = (0..features.len())
            .map(|_| {
                rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut noise_rng)
            })
            .collect();
        let e = linear_probe(&features, &noise, seed, 0.7)
            .unwrap()
            .relative_error;
        lo = lo.min(e);
        hi = hi.max(e);
    }
    let pass = clean < 1e-8 && lo >= 0.8 && hi <= 1.2;
    report(
        8,
        "linear probe calibration",
        pass,
        &format!(
            "noiseless error {clean:.2e}, pure-noise error range [{lo:.3}, {hi:.3}] over 20 seeds"
        ),
    );
    assert!(pass);
}
