//! Synthetic identity-clustered embeddings with known degradation.
//!
//! Each identity gets a prototype drawn uniformly on the unit sphere. A
//! record is the prototype plus isotropic Gaussian noise of scale `δ`,
//! renormalized. Small `δ` yields iconic records that sit next to their
//! prototype; large `δ` yields junk records that are close to uniform on
//! the sphere. The generating `δ` is kept as the `degradation` covariate
//! so downstream scores can be checked against ground truth.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::embeddings::{l2_normalize, Dataset, EmbeddingRecord};
use crate::error::{Error, Result};
use crate::rng::{substream, Rng};

pub const DEGRADATION: &str = "degradation";
pub const IS_ICONIC: &str = "is_iconic";

/// How per-record noise scales are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegradationMode {
    /// `δ = σ_lo` with probability `iconic_fraction`, otherwise `σ_hi`.
    #[default]
    TwoLevel,
    /// `δ ~ Uniform[σ_lo, σ_hi]`; records below the midpoint count as iconic.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub num_identities: usize,
    pub images_per_identity: usize,
    pub dimension: usize,
    pub iconic_fraction: f64,
    pub iconic_noise: f64,
    pub junk_noise: f64,
    pub media_per_identity: usize,
    pub mode: DegradationMode,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_identities: 100,
            images_per_identity: 20,
            dimension: 32,
            iconic_fraction: 0.5,
            iconic_noise: 0.05,
            junk_noise: 1.5,
            media_per_identity: 4,
            mode: DegradationMode::TwoLevel,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.dimension < 2 {
            return Err(Error::InvalidDimension(self.dimension));
        }
        if self.num_identities == 0 || self.images_per_identity == 0 {
            return bad("num_identities and images_per_identity must be positive");
        }
        if self.media_per_identity == 0 {
            return bad("media_per_identity must be positive");
        }
        if !(self.iconic_fraction > 0.0 && self.iconic_fraction < 1.0) {
            return bad("iconic_fraction must lie in (0, 1)");
        }
        if !(self.iconic_noise >= 0.0 && self.iconic_noise.is_finite()) {
            return bad("iconic_noise must be finite and non-negative");
        }
        if !(self.junk_noise > self.iconic_noise && self.junk_noise.is_finite()) {
            return bad("junk_noise must be finite and exceed iconic_noise");
        }
        Ok(())
    }
}

/// Generated dataset together with the identity prototypes, in identity order.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub prototypes: Vec<Vec<f64>>,
}

pub fn identity_name(k: usize) -> alloc::string::String {
    format!("id{k:05}")
}

fn gaussian_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform direction on the unit sphere.
pub fn sample_unit_sphere(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        if let Ok(u) = l2_normalize(&gaussian_vector(rng, dim)) {
            return u;
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    generate_with_prototypes(config).map(|out| out.dataset)
}

/// Identity `k` draws from its own substream of `seed`, so the output for
/// one identity does not depend on how many identities come before it.
pub fn generate_with_prototypes(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let dim = config.dimension;
    let midpoint = 0.5 * (config.iconic_noise + config.junk_noise);
    let mut records = Vec::with_capacity(config.num_identities * config.images_per_identity);
    let mut prototypes = Vec::with_capacity(config.num_identities);

    for k in 0..config.num_identities {
        let mut rng = substream(config.seed, k as u64);
        let prototype = sample_unit_sphere(&mut rng, dim);
        let identity = identity_name(k);
        for i in 0..config.images_per_identity {
            let (delta, iconic) = match config.mode {
                DegradationMode::TwoLevel => {
                    if rng.random_bool(config.iconic_fraction) {
                        (config.iconic_noise, true)
                    } else {
                        (config.junk_noise, false)
                    }
                }
                DegradationMode::Continuous => {
                    let d = rng.random_range(config.iconic_noise..=config.junk_noise);
                    (d, d <= midpoint)
                }
            };
            let noise = gaussian_vector(&mut rng, dim);
            let vector = if delta == 0.0 {
                prototype.clone()
            } else {
                let raw: Vec<f64> = prototype
                    .iter()
                    .zip(&noise)
                    .map(|(p, g)| p + delta * g)
                    .collect();
                match l2_normalize(&raw) {
                    Ok(v) => v,
                    // p + δg landed exactly on the origin; fall back to the prototype.
                    Err(_) => prototype.clone(),
                }
            };
            let media = i % config.media_per_identity;
            records.push(
                EmbeddingRecord::new(
                    format!("{identity}_img{i:04}"),
                    identity.clone(),
                    format!("{identity}_m{media:02}"),
                    vector,
                )
                .with_covariate(DEGRADATION, delta)
                .with_covariate(IS_ICONIC, if iconic { 1.0 } else { 0.0 }),
            );
        }
        prototypes.push(prototype);
    }
    Ok(SynthOutput {
        dataset: Dataset::new(dim, records)?,
        prototypes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{cosine_similarity, feature_norm_score};

    #[test]
    fn zero_iconic_noise_reproduces_prototype() {
        let cfg = SynthConfig {
            iconic_noise: 0.0,
            num_identities: 5,
            images_per_identity: 10,
            ..SynthConfig::default()
        };
        let out = generate_with_prototypes(&cfg).unwrap();
        let mut iconic = 0;
        for rec in out.dataset.records() {
            if rec.covariate(IS_ICONIC) == Some(1.0) {
                let k: usize = rec.identity_id[2..].parse().unwrap();
                assert_eq!(rec.vector, out.prototypes[k]);
                iconic += 1;
            }
        }
        assert!(iconic > 0);
    }

    #[test]
    fn vectors_are_unit_norm_and_media_round_robin() {
        let cfg = SynthConfig {
            mode: DegradationMode::Continuous,
            num_identities: 3,
            images_per_identity: 9,
            media_per_identity: 3,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg).unwrap();
        for rec in ds.records() {
            assert!((feature_norm_score(&rec.vector) - 1.0).abs() < 1e-12);
            let d = rec.covariate(DEGRADATION).unwrap();
            assert!((cfg.iconic_noise..=cfg.junk_noise).contains(&d));
        }
        let media: alloc::collections::BTreeSet<_> = ds
            .records()
            .iter()
            .filter(|r| r.identity_id == "id00000")
            .map(|r| r.media_id.as_str())
            .collect();
        assert_eq!(media.len(), 3);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig::default();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 1, ..cfg };
        assert_ne!(
            generate(&other).unwrap(),
            generate(&SynthConfig::default()).unwrap()
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig {
                junk_noise: 0.05,
                ..base.clone()
            },
            SynthConfig {
                iconic_fraction: 1.0,
                ..base.clone()
            },
            SynthConfig {
                dimension: 1,
                ..base.clone()
            },
            SynthConfig {
                media_per_identity: 0,
                ..base.clone()
            },
        ] {
            assert!(generate(&cfg).is_err());
        }
    }

    #[test]
    fn identity_prototypes_nearly_orthogonal_in_high_dimension() {
        let out = generate_with_prototypes(&SynthConfig {
            num_identities: 40,
            images_per_identity: 1,
            dimension: 64,
            ..SynthConfig::default()
        })
        .unwrap();
        let p = &out.prototypes;
        let mut sum = 0.0;
        let mut n = 0.0;
        for a in 0..p.len() {
            for b in a + 1..p.len() {
                sum += cosine_similarity(&p[a], &p[b]).unwrap();
                n += 1.0;
            }
        }
        assert!((sum / n).abs() < 0.2);
    }
}
