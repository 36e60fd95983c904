//! Embedding records, datasets and the vector primitives everything else
//! builds on.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One descriptor with its identity, media and covariate annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub image_id: String,
    pub identity_id: String,
    pub media_id: String,
    pub vector: Vec<f64>,
    pub covariates: BTreeMap<String, f64>,
}

impl EmbeddingRecord {
    pub fn new(
        image_id: impl Into<String>,
        identity_id: impl Into<String>,
        media_id: impl Into<String>,
        vector: Vec<f64>,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            identity_id: identity_id.into(),
            media_id: media_id.into(),
            vector,
            covariates: BTreeMap::new(),
        }
    }

    pub fn with_covariate(mut self, name: impl Into<String>, value: f64) -> Self {
        self.covariates.insert(name.into(), value);
        self
    }

    pub fn covariate(&self, name: &str) -> Option<f64> {
        self.covariates.get(name).copied()
    }
}

/// An immutable, validated collection of records sharing one dimension.
///
/// Construction checks every record invariant and builds the identity
/// index, so a `Dataset` value is always internally consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dimension: usize,
    records: Vec<EmbeddingRecord>,
    identity_index: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    pub fn new(dimension: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidDimension(dimension));
        }
        let mut seen = BTreeSet::new();
        let mut identity_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, rec) in records.iter().enumerate() {
            if rec.vector.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: rec.vector.len(),
                });
            }
            if let Some(position) = rec.vector.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    image_id: rec.image_id.clone(),
                    position,
                });
            }
            if !seen.insert(rec.image_id.as_str()) {
                return Err(Error::DuplicateImageId(rec.image_id.clone()));
            }
            identity_index
                .entry(rec.identity_id.clone())
                .or_default()
                .push(idx);
        }
        Ok(Self {
            dimension,
            records,
            identity_index,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> Result<&EmbeddingRecord> {
        self.records.get(index).ok_or(Error::RecordOutOfRange {
            index,
            len: self.records.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record indices per identity, identities in lexicographic order.
    pub fn identity_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.identity_index
    }

    pub fn identity_members(&self, identity: &str) -> Option<&[usize]> {
        self.identity_index.get(identity).map(Vec::as_slice)
    }

    /// Sorted union of covariate names across all records.
    pub fn covariate_names(&self) -> Vec<String> {
        let names: BTreeSet<&String> = self
            .records
            .iter()
            .flat_map(|r| r.covariates.keys())
            .collect();
        names.into_iter().cloned().collect()
    }

    pub fn position_of(&self, image_id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.image_id == image_id)
    }

    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, also used as the feature-norm baseline quality score.
pub fn feature_norm_score(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = feature_norm_score(v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = feature_norm_score(a);
    let nb = feature_norm_score(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalize_three_four_five() {
        let u = l2_normalize(&[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(l2_normalize(&[0.0, 0.0]), Err(Error::ZeroNorm));
        assert_eq!(l2_normalize(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn cosine_basic_cases() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), -1.0);
        assert!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm)
        );
    }

    #[test]
    fn norm_score() {
        assert_eq!(feature_norm_score(&[3.0, 4.0]), 5.0);
        assert_eq!(feature_norm_score(&[0.0; 4]), 0.0);
        assert_eq!(feature_norm_score(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn dataset_validation() {
        let rec = |id: &str, v: Vec<f64>| EmbeddingRecord::new(id, "a", "m", v);
        assert!(Dataset::new(1, vec![]).is_err());
        let ds = Dataset::new(2, vec![rec("x", vec![1.0, 0.0])]).unwrap();
        assert_eq!(ds.identity_index().len(), 1);
        assert_eq!(
            Dataset::new(2, vec![rec("x", vec![1.0])]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(matches!(
            Dataset::new(2, vec![rec("x", vec![1.0, 0.0]), rec("x", vec![0.0, 1.0])]),
            Err(Error::DuplicateImageId(_))
        ));
        assert!(matches!(
            Dataset::new(2, vec![rec("x", vec![f64::NAN, 0.0])]),
            Err(Error::NonFinite { position: 0, .. })
        ));
    }
}
