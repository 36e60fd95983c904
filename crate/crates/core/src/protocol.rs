//! Synthetic verification protocols built from a generated dataset.
//!
//! Every chosen identity contributes two disjoint templates, each holding a
//! fixed number of junk members and iconic members for the rest. The two
//! templates of an identity form a genuine match; impostor matches pair the
//! first template of one identity with the second template of another.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::embeddings::Dataset;
use crate::error::{Error, Result};
use crate::pooling::{Match, Template};
use crate::rng::seeded;
use crate::synth::IS_ICONIC;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub template_size: usize,
    pub junk_per_template: usize,
    pub genuine: usize,
    pub impostor: usize,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            template_size: 8,
            junk_per_template: 3,
            genuine: 200,
            impostor: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub templates: Vec<Template>,
    /// Genuine matches first, then impostors.
    pub matches: Vec<Match>,
}

/// Uses the first `genuine` identities (in id order) that hold enough
/// iconic and junk records for two templates.
pub fn build_protocol(ds: &Dataset, config: &ProtocolConfig) -> Result<Protocol> {
    let (size, junk) = (config.template_size, config.junk_per_template);
    if size == 0 || junk > size {
        return Err(Error::InvalidConfig(
            "need 0 < template_size and junk_per_template <= template_size".into(),
        ));
    }
    if config.genuine < 2 && config.impostor > 0 {
        return Err(Error::InvalidConfig(
            "impostor matches need at least two identities".into(),
        ));
    }
    let max_impostor = config.genuine * config.genuine.saturating_sub(1);
    if config.impostor > max_impostor {
        return Err(Error::InvalidConfig(format!(
            "at most {max_impostor} distinct impostor matches for {} identities",
            config.genuine
        )));
    }

    let mut rng = seeded(config.seed);
    let mut templates = Vec::with_capacity(2 * config.genuine);
    for (id, members) in ds.identity_index() {
        if templates.len() == 2 * config.genuine {
            break;
        }
        let (mut iconic, mut noisy) = (Vec::new(), Vec::new());
        for &m in members {
            match ds.record(m)?.covariate(IS_ICONIC) {
                Some(1.0) => iconic.push(m),
                Some(_) => noisy.push(m),
                None => {
                    return Err(Error::MissingCovariate {
                        index: m,
                        name: IS_ICONIC.into(),
                    })
                }
            }
        }
        if iconic.len() < 2 * (size - junk) || noisy.len() < 2 * junk {
            continue;
        }
        iconic.shuffle(&mut rng);
        noisy.shuffle(&mut rng);
        for (k, suffix) in ["a", "b"].iter().enumerate() {
            let mut t: Vec<usize> = iconic[k * (size - junk)..(k + 1) * (size - junk)].to_vec();
            t.extend_from_slice(&noisy[k * junk..(k + 1) * junk]);
            t.shuffle(&mut rng);
            templates.push(Template::new(format!("{id}_{suffix}"), t));
        }
    }
    let chosen = templates.len() / 2;
    if chosen < config.genuine {
        return Err(Error::TooFewIdentities(chosen));
    }

    let mut matches: Vec<Match> = (0..chosen)
        .map(|k| Match {
            template_a: templates[2 * k].id.clone(),
            template_b: templates[2 * k + 1].id.clone(),
            genuine: true,
        })
        .collect();
    let mut seen = BTreeSet::new();
    while seen.len() < config.impostor {
        let a = rng.random_range(0..chosen);
        let b = rng.random_range(0..chosen);
        if a != b && seen.insert((a, b)) {
            matches.push(Match {
                template_a: templates[2 * a].id.clone(),
                template_b: templates[2 * b + 1].id.clone(),
                genuine: false,
            });
        }
    }
    Ok(Protocol { templates, matches })
}
