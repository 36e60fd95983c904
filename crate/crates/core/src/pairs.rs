//! Identity-aware pair sampling and the iconic/non-iconic mixture filter.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::embeddings::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Pair label: same identity or different identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = Error;

    fn try_from(y: i64) -> Result<Self> {
        match y {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidLabel(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub y: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureStats {
    pub identity_id: String,
    /// Records whose proxy score reaches the threshold.
    pub l: usize,
    /// Records below the threshold.
    pub m: usize,
}

impl MixtureStats {
    /// `m / (l + m)`.
    pub fn ratio(&self) -> f64 {
        let n = self.l + self.m;
        if n == 0 {
            0.0
        } else {
            self.m as f64 / n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochPlan {
    pub pairs: Vec<Pair>,
    pub positives: usize,
    pub negatives: usize,
    pub seed: u64,
}

impl EpochPlan {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn mixture_stats(
    ds: &Dataset,
    proxy_score: &[f64],
    threshold: f64,
) -> Result<Vec<MixtureStats>> {
    if proxy_score.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            expected: ds.len(),
            found: proxy_score.len(),
        });
    }
    Ok(ds
        .identity_index()
        .iter()
        .map(|(id, members)| {
            let l = members
                .iter()
                .filter(|&&k| proxy_score[k] >= threshold)
                .count();
            MixtureStats {
                identity_id: id.clone(),
                l,
                m: members.len() - l,
            }
        })
        .collect())
}

/// Identities whose non-iconic share `m / (l + m)` lies within `band` of
/// one half and that hold at least two iconic records.
pub fn mixture_filter(
    ds: &Dataset,
    proxy_score: &[f64],
    threshold: f64,
    band: f64,
) -> Result<BTreeSet<String>> {
    Ok(mixture_stats(ds, proxy_score, threshold)?
        .into_iter()
        .filter(|s| s.l + s.m > 0 && s.l >= 2 && (s.ratio() - 0.5).abs() <= band)
        .map(|s| s.identity_id)
        .collect())
}

fn pairs_within(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Draws `n_pos` positive and `n_neg` negative pairs with replacement, then
/// shuffles them.
///
/// Positive pairs are uniform over the pool of same-identity pairs: the
/// identity is chosen with weight `C(n_k, 2)` and then an unordered pair of
/// its records uniformly. Negative pairs pick two distinct identities
/// uniformly and one record from each.
pub fn sample_epoch(
    ds: &Dataset,
    eligible: &BTreeSet<String>,
    n_pos: usize,
    n_neg: usize,
    seed: u64,
) -> Result<EpochPlan> {
    let mut groups: Vec<&[usize]> = Vec::with_capacity(eligible.len());
    for id in eligible {
        let members = ds
            .identity_members(id)
            .ok_or_else(|| Error::UnknownIdentity(id.clone()))?;
        groups.push(members);
    }

    let mut rng = seeded(seed);
    let mut pairs = Vec::with_capacity(n_pos + n_neg);

    if n_pos > 0 {
        let weights: Vec<u64> = groups.iter().map(|g| pairs_within(g.len())).collect();
        let chooser = WeightedIndex::new(&weights).map_err(|_| Error::NoPositivePairs)?;
        for _ in 0..n_pos {
            let g = groups[chooser.sample(&mut rng)];
            let a = rng.random_range(0..g.len());
            let mut b = rng.random_range(0..g.len() - 1);
            if b >= a {
                b += 1;
            }
            pairs.push(Pair {
                i: g[a],
                j: g[b],
                y: Label::Positive,
            });
        }
    }

    if n_neg > 0 {
        if groups.len() < 2 {
            return Err(Error::TooFewIdentities(groups.len()));
        }
        for _ in 0..n_neg {
            let a = rng.random_range(0..groups.len());
            let mut b = rng.random_range(0..groups.len() - 1);
            if b >= a {
                b += 1;
            }
            let (ga, gb) = (groups[a], groups[b]);
            pairs.push(Pair {
                i: ga[rng.random_range(0..ga.len())],
                j: gb[rng.random_range(0..gb.len())],
                y: Label::Negative,
            });
        }
    }

    pairs.shuffle(&mut rng);
    Ok(EpochPlan {
        pairs,
        positives: n_pos,
        negatives: n_neg,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingRecord;
    use alloc::format;
    use alloc::vec;

    fn toy(sizes: &[usize]) -> Dataset {
        let mut recs = Vec::new();
        for (k, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                recs.push(EmbeddingRecord::new(
                    format!("{k}-{i}"),
                    format!("id{k}"),
                    "m",
                    vec![1.0, i as f64],
                ));
            }
        }
        Dataset::new(2, recs).unwrap()
    }

    fn all_ids(ds: &Dataset) -> BTreeSet<String> {
        ds.identity_index().keys().cloned().collect()
    }

    #[test]
    fn mixture_filter_ratio_cases() {
        let ds = toy(&[10, 10]);
        // id0: 5 above, 5 below; id1: all above.
        let proxy: Vec<f64> = (0..20)
            .map(|k| if k < 10 && k % 2 == 1 { 0.0 } else { 1.0 })
            .collect();
        let kept = mixture_filter(&ds, &proxy, 0.5, 0.1).unwrap();
        assert!(kept.contains("id0"));
        assert!(!kept.contains("id1"));
        let stats = mixture_stats(&ds, &proxy, 0.5).unwrap();
        assert_eq!((stats[0].l, stats[0].m), (5, 5));
        assert_eq!(stats[1].ratio(), 0.0);
    }

    #[test]
    fn mixture_filter_needs_two_iconic() {
        let ds = toy(&[2]);
        let kept = mixture_filter(&ds, &[1.0, 0.0], 0.5, 0.5).unwrap();
        assert!(kept.is_empty());
    }

    #[test]
    fn empty_plan() {
        let ds = toy(&[1]);
        let plan = sample_epoch(&ds, &all_ids(&ds), 0, 0, 3).unwrap();
        assert!(plan.is_empty());
    }

    #[test]
    fn single_identity_cannot_make_negatives() {
        let ds = toy(&[5]);
        assert_eq!(
            sample_epoch(&ds, &all_ids(&ds), 0, 1, 3),
            Err(Error::TooFewIdentities(1))
        );
        assert!(sample_epoch(&ds, &all_ids(&ds), 4, 0, 3).is_ok());
    }

    #[test]
    fn singletons_cannot_make_positives() {
        let ds = toy(&[1, 1, 1]);
        assert_eq!(
            sample_epoch(&ds, &all_ids(&ds), 1, 0, 3),
            Err(Error::NoPositivePairs)
        );
    }

    #[test]
    fn unknown_identity_rejected() {
        let ds = toy(&[3, 3]);
        let mut ids = all_ids(&ds);
        ids.insert("ghost".into());
        assert!(matches!(
            sample_epoch(&ds, &ids, 1, 1, 0),
            Err(Error::UnknownIdentity(_))
        ));
    }

    #[test]
    fn label_conversion() {
        assert_eq!(Label::try_from(1).unwrap(), Label::Positive);
        assert_eq!(Label::try_from(-1).unwrap(), Label::Negative);
        assert_eq!(Label::try_from(0), Err(Error::InvalidLabel(0)));
    }
}
