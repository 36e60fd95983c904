//! Template pooling and the verification protocol.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::embeddings::{cosine_similarity, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.3;

/// A set of dataset records describing one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub id: String,
    pub members: Vec<usize>,
}

impl Template {
    pub fn new(id: impl Into<String>, members: Vec<usize>) -> Self {
        Self {
            id: id.into(),
            members,
        }
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::EmptyTemplate(self.id.clone()));
        }
        for &m in &self.members {
            ds.record(m)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMethod {
    QualityPool,
    MediaAverage,
    PlainAverage,
}

impl PoolMethod {
    pub fn name(self) -> &'static str {
        match self {
            PoolMethod::QualityPool => "quality-pool",
            PoolMethod::MediaAverage => "media-average",
            PoolMethod::PlainAverage => "plain-average",
        }
    }
}

/// Pooled template descriptor with the member weights that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFeature {
    pub vector: Vec<f64>,
    pub method: PoolMethod,
    /// One weight per template member, in member order.
    pub weights: Vec<f64>,
}

/// Softmax weights `q_i = exp(λ r_i) / Σ_j exp(λ r_j)`, evaluated after
/// subtracting the largest exponent.
pub fn quality_weights(scores: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Degenerate("quality weights need at least one score"));
    }
    if scores.iter().any(|s| !s.is_finite()) || !lambda.is_finite() {
        return Err(Error::Degenerate(
            "quality scores and lambda must be finite",
        ));
    }
    let exps: Vec<f64> = scores.iter().map(|s| lambda * s).collect();
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = exps.iter().map(|x| libm::exp(x - top)).collect();
    let total: f64 = e.iter().sum();
    Ok(e.into_iter().map(|x| x / total).collect())
}

fn weighted_sum(ds: &Dataset, members: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ds.dimension()];
    for (&m, &w) in members.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(&ds.records()[m].vector) {
            *o += w * x;
        }
    }
    out
}

/// `f = Σ q_i f_i` over the raw member vectors. `scores` is indexed by
/// dataset record.
pub fn quality_pool(
    template: &Template,
    ds: &Dataset,
    scores: &[f64],
    lambda: f64,
) -> Result<PooledFeature> {
    template.check(ds)?;
    let member_scores = template
        .members
        .iter()
        .map(|&m| {
            scores
                .get(m)
                .copied()
                .filter(|s| s.is_finite())
                .ok_or(Error::MissingScore(m))
        })
        .collect::<Result<Vec<f64>>>()?;
    let weights = quality_weights(&member_scores, lambda)?;
    Ok(PooledFeature {
        vector: weighted_sum(ds, &template.members, &weights),
        method: PoolMethod::QualityPool,
        weights,
    })
}

pub fn plain_average(template: &Template, ds: &Dataset) -> Result<PooledFeature> {
    template.check(ds)?;
    let n = template.members.len() as f64;
    let weights = vec![1.0 / n; template.members.len()];
    // Sum then divide, matching the arithmetic of `media_average` with
    // singleton media.
    let mut vector = weighted_sum(ds, &template.members, &vec![1.0; template.members.len()]);
    for v in &mut vector {
        *v /= n;
    }
    Ok(PooledFeature {
        vector,
        method: PoolMethod::PlainAverage,
        weights,
    })
}

/// Averages members within each media, then averages the media means with
/// equal weight.
pub fn media_average(template: &Template, ds: &Dataset) -> Result<PooledFeature> {
    template.check(ds)?;
    let mut per_media: BTreeMap<&str, usize> = BTreeMap::new();
    for &m in &template.members {
        *per_media
            .entry(ds.records()[m].media_id.as_str())
            .or_default() += 1;
    }
    let n_media = per_media.len() as f64;
    let weights: Vec<f64> = template
        .members
        .iter()
        .map(|&m| 1.0 / (n_media * per_media[ds.records()[m].media_id.as_str()] as f64))
        .collect();
    // Sum per media first so a media holding k copies of v yields exactly v.
    // Media are visited in order of first appearance.
    let mut sums: Vec<(&str, Vec<f64>)> = Vec::new();
    for &m in &template.members {
        let rec = &ds.records()[m];
        let k = match sums.iter().position(|(id, _)| *id == rec.media_id) {
            Some(k) => k,
            None => {
                sums.push((rec.media_id.as_str(), vec![0.0; ds.dimension()]));
                sums.len() - 1
            }
        };
        for (a, x) in sums[k].1.iter_mut().zip(&rec.vector) {
            *a += x;
        }
    }
    let mut vector = vec![0.0; ds.dimension()];
    for (media, sum) in &sums {
        let count = per_media[media] as f64;
        for (v, s) in vector.iter_mut().zip(sum) {
            *v += s / count;
        }
    }
    for v in &mut vector {
        *v /= n_media;
    }
    Ok(PooledFeature {
        vector,
        method: PoolMethod::MediaAverage,
        weights,
    })
}

/// Cosine similarity of two pooled descriptors.
pub fn template_similarity(a: &PooledFeature, b: &PooledFeature) -> Result<f64> {
    cosine_similarity(&a.vector, &b.vector)
}

/// Pooling strategy for a verification run.
#[derive(Debug, Clone, Copy)]
pub enum Pooling<'a> {
    Quality { scores: &'a [f64], lambda: f64 },
    MediaAverage,
    PlainAverage,
}

impl Pooling<'_> {
    pub fn pool(&self, template: &Template, ds: &Dataset) -> Result<PooledFeature> {
        match *self {
            Pooling::Quality { scores, lambda } => quality_pool(template, ds, scores, lambda),
            Pooling::MediaAverage => media_average(template, ds),
            Pooling::PlainAverage => plain_average(template, ds),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub template_a: String,
    pub template_b: String,
    pub genuine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMatch {
    pub template_a: String,
    pub template_b: String,
    pub genuine: bool,
    pub similarity: f64,
}

/// Pools every template once, then scores each match in input order.
pub fn verify_protocol(
    templates: &[Template],
    matches: &[Match],
    ds: &Dataset,
    pooling: Pooling<'_>,
) -> Result<Vec<ScoredMatch>> {
    let by_id: BTreeMap<&str, &Template> = templates.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut pooled: BTreeMap<&str, PooledFeature> = BTreeMap::new();
    for m in matches {
        for id in [&m.template_a, &m.template_b] {
            if pooled.contains_key(id.as_str()) {
                continue;
            }
            let t = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownTemplate(id.clone()))?;
            pooled.insert(t.id.as_str(), pooling.pool(t, ds)?);
        }
    }
    matches
        .iter()
        .map(|m| {
            let similarity = template_similarity(
                &pooled[m.template_a.as_str()],
                &pooled[m.template_b.as_str()],
            )?;
            Ok(ScoredMatch {
                template_a: m.template_a.clone(),
                template_b: m.template_b.clone(),
                genuine: m.genuine,
                similarity,
            })
        })
        .collect()
}
