//! Verification ROC, covariate analyses, rank correlation and the linear
//! probe.

mod bins;
mod probe;
mod roc;
mod stats;

pub use bins::{covariate_bins, equal_count_bins, level_distributions, BinStats, LevelStats};
pub use probe::{linear_probe, ProbeReport, PROBE_RIDGE};
pub use roc::{roc, tpr_at_fpr, OperatingPoint, RocCurve, RocPoint};
pub use stats::{average_ranks, mean, pearson, spearman};
