use iconicity_core::embeddings::{cosine_similarity, dot};
use iconicity_core::synth::{generate, generate_with_prototypes, DEGRADATION, IS_ICONIC};
use iconicity_core::{DegradationMode, SynthConfig};

fn example_config(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        num_identities: 2,
        images_per_identity: 10,
        iconic_fraction: 0.5,
        iconic_noise: 0.05,
        junk_noise: 1.5,
        ..SynthConfig::default()
    }
}

#[test]
fn iconic_pairs_are_more_similar_than_pairs_with_junk() {
    // Pool within-identity pairs over seeds until both groups hold 1000+.
    let (mut clean, mut mixed) = (Vec::new(), Vec::new());
    let mut seed = 0;
    while clean.len() < 1000 || mixed.len() < 1000 {
        let ds = generate(&example_config(seed)).unwrap();
        for members in ds.identity_index().values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    let (ri, rj) = (ds.record(i).unwrap(), ds.record(j).unwrap());
                    let c = cosine_similarity(&ri.vector, &rj.vector).unwrap();
                    let both = ri.covariate(IS_ICONIC) == Some(1.0)
                        && rj.covariate(IS_ICONIC) == Some(1.0);
                    if both {
                        clean.push(c);
                    } else {
                        mixed.push(c);
                    }
                }
            }
        }
        seed += 1;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = mean(&clean) - mean(&mixed);
    assert!(gap > 0.2, "gap {gap}");
}

#[test]
fn vectors_are_unit_norm() {
    for mode in [DegradationMode::TwoLevel, DegradationMode::Continuous] {
        let ds = generate(&SynthConfig {
            mode,
            ..SynthConfig::default()
        })
        .unwrap();
        for r in ds.records() {
            assert!((dot(&r.vector, &r.vector).sqrt() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn prototypes_of_distinct_identities_are_nearly_orthogonal() {
    let out = generate_with_prototypes(&SynthConfig {
        num_identities: 60,
        ..SynthConfig::default()
    })
    .unwrap();
    let p = &out.prototypes;
    let mut sum = 0.0;
    let mut n = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            sum += dot(&p[a], &p[b]);
            n += 1;
        }
    }
    assert!((sum / n as f64).abs() < 0.2);
}

#[test]
fn zero_iconic_noise_reproduces_prototypes() {
    let cfg = SynthConfig {
        iconic_noise: 0.0,
        ..SynthConfig::default()
    };
    let out = generate_with_prototypes(&cfg).unwrap();
    for r in out
        .dataset
        .records()
        .iter()
        .filter(|r| r.covariate(IS_ICONIC) == Some(1.0))
    {
        let k = out
            .dataset
            .identity_index()
            .keys()
            .position(|id| *id == r.identity_id)
            .unwrap();
        assert_eq!(r.vector, out.prototypes[k]);
        assert_eq!(r.covariate(DEGRADATION), Some(0.0));
    }
}

#[test]
fn same_seed_same_dataset() {
    let cfg = SynthConfig {
        mode: DegradationMode::Continuous,
        ..SynthConfig::default()
    };
    assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
}

#[test]
fn continuous_mode_spans_the_noise_range() {
    let cfg = SynthConfig {
        mode: DegradationMode::Continuous,
        ..SynthConfig::default()
    };
    let ds = generate(&cfg).unwrap();
    for r in ds.records() {
        let d = r.covariate(DEGRADATION).unwrap();
        assert!((cfg.iconic_noise..=cfg.junk_noise).contains(&d));
    }
}
