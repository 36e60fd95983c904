use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::embeddings::Dataset;
use crate::error::{Error, Result};

/// Equal-count bins over a covariate, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    /// `(lowest, highest)` covariate value inside each bin.
    pub edges: Vec<(f64, f64)>,
    pub counts: Vec<usize>,
    pub mean_score: Vec<f64>,
    pub mean_covariate: Vec<f64>,
}

impl BinStats {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Splits observations sorted by covariate into `n_bins` nearly equal
/// runs. A cut never separates equal covariate values: it moves up to the
/// end of the tie, and bins left empty are dropped.
pub fn equal_count_bins(covariate: &[f64], scores: &[f64], n_bins: usize) -> Result<BinStats> {
    let n = covariate.len();
    if scores.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: scores.len(),
        });
    }
    if n_bins == 0 || n_bins > n {
        return Err(Error::TooManyBins { bins: n_bins, n });
    }
    if covariate.iter().chain(scores).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite covariate or score"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| covariate[a].total_cmp(&covariate[b]).then(a.cmp(&b)));

    let mut stats = BinStats {
        edges: Vec::new(),
        counts: Vec::new(),
        mean_score: Vec::new(),
        mean_covariate: Vec::new(),
    };
    let mut start = 0;
    for b in 1..=n_bins {
        let mut end = (b * n / n_bins).max(start);
        while end > 0 && end < n && covariate[order[end]] == covariate[order[end - 1]] {
            end += 1;
        }
        if end <= start {
            continue;
        }
        let idx = &order[start..end];
        let count = idx.len() as f64;
        stats
            .edges
            .push((covariate[idx[0]], covariate[idx[idx.len() - 1]]));
        stats.counts.push(idx.len());
        stats
            .mean_score
            .push(idx.iter().map(|&k| scores[k]).sum::<f64>() / count);
        stats
            .mean_covariate
            .push(idx.iter().map(|&k| covariate[k]).sum::<f64>() / count);
        start = end;
    }
    Ok(stats)
}

fn covariate_values(ds: &Dataset, records: &[usize], name: &str) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|&k| {
            ds.record(k)?
                .covariate(name)
                .ok_or_else(|| Error::MissingCovariate {
                    index: k,
                    name: String::from(name),
                })
        })
        .collect()
}

fn select(scores: &[f64], records: &[usize]) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|&k| scores.get(k).copied().ok_or(Error::MissingScore(k)))
        .collect()
}

/// Equal-count binning of `covariate` over the chosen `records`.
/// `scores` is indexed by dataset record; pre-filter `records` to hold
/// other covariates fixed.
pub fn covariate_bins(
    ds: &Dataset,
    records: &[usize],
    scores: &[f64],
    covariate: &str,
    n_bins: usize,
) -> Result<BinStats> {
    let values = covariate_values(ds, records, covariate)?;
    equal_count_bins(&values, &select(scores, records)?, n_bins)
}

/// Score summary for one level of a discrete covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub level: f64,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    /// Counts over equal-width bins spanning [0, 1]; out-of-range scores
    /// land in the edge bins.
    pub histogram: Vec<usize>,
}

/// Per-level score distributions, levels ascending. Only observed levels
/// are reported.
pub fn level_distributions(
    ds: &Dataset,
    records: &[usize],
    scores: &[f64],
    covariate: &str,
    histogram_bins: usize,
) -> Result<Vec<LevelStats>> {
    if histogram_bins == 0 {
        return Err(Error::Degenerate("histogram needs at least one bin"));
    }
    let values = covariate_values(ds, records, covariate)?;
    let selected = select(scores, records)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut out = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let level = values[order[start]];
        let mut end = start;
        while end < order.len() && values[order[end]] == level {
            end += 1;
        }
        let group: Vec<f64> = order[start..end].iter().map(|&k| selected[k]).collect();
        let n = group.len() as f64;
        let mean = group.iter().sum::<f64>() / n;
        let var = group.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        let mut histogram = vec![0; histogram_bins];
        for s in &group {
            let b = (s * histogram_bins as f64) as isize;
            histogram[b.clamp(0, histogram_bins as isize - 1) as usize] += 1;
        }
        out.push(LevelStats {
            level,
            count: group.len(),
            mean,
            stddev: libm::sqrt(var),
            histogram,
        });
        start = end;
    }
    Ok(out)
}
