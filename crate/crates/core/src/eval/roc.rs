use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One operating point: matches with similarity `>= threshold` are accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Accepted genuine matches.
    pub true_accepts: usize,
    /// Accepted impostor matches.
    pub false_accepts: usize,
    pub tpr: f64,
    pub fpr: f64,
}

/// Empirical ROC with one point per distinct observed score (ascending)
/// plus the reject-all point at `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub genuine: usize,
    pub impostor: usize,
}

/// Builds the curve from `(similarity, genuine)` pairs.
pub fn roc(scores: &[(f64, bool)]) -> Result<RocCurve> {
    if scores.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Degenerate("NaN similarity"));
    }
    let genuine = scores.iter().filter(|(_, g)| *g).count();
    let impostor = scores.len() - genuine;
    if genuine == 0 || impostor == 0 {
        return Err(Error::MissingClass);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Sweep from the highest score down; each distinct score becomes a
    // threshold once every match tied at it has been accepted.
    let (g, i) = (genuine as f64, impostor as f64);
    let mut points = Vec::new();
    points.push(RocPoint {
        threshold: f64::INFINITY,
        true_accepts: 0,
        false_accepts: 0,
        tpr: 0.0,
        fpr: 0.0,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < sorted.len() {
        let t = sorted[k].0;
        while k < sorted.len() && sorted[k].0 == t {
            if sorted[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            threshold: t,
            true_accepts: tp,
            false_accepts: fp,
            tpr: tp as f64 / g,
            fpr: fp as f64 / i,
        });
    }
    points.reverse();
    Ok(RocCurve {
        points,
        genuine,
        impostor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub target_fpr: f64,
    pub tpr: f64,
    /// FPR actually achieved, the largest one not above the target.
    pub fpr: f64,
    pub threshold: f64,
    /// False when the target is below `1 / impostors`, i.e. finer than
    /// the impostor set can resolve.
    pub resolvable: bool,
}

/// TPR at the largest achievable FPR not exceeding each target.
pub fn tpr_at_fpr(curve: &RocCurve, targets: &[f64]) -> Vec<OperatingPoint> {
    let min_step = 1.0 / curve.impostor as f64;
    targets
        .iter()
        .map(|&target| {
            // Points are ordered by ascending threshold, so FPR descends;
            // the first point within budget has the largest FPR and TPR.
            let p = curve
                .points
                .iter()
                .find(|p| p.fpr <= target)
                .copied()
                .unwrap_or(curve.points[curve.points.len() - 1]);
            OperatingPoint {
                target_fpr: target,
                tpr: p.tpr,
                fpr: p.fpr,
                threshold: p.threshold,
                resolvable: target >= min_step,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn needs_both_classes() {
        assert_eq!(roc(&[(0.5, true)]), Err(Error::MissingClass));
        assert_eq!(roc(&[(0.5, false)]), Err(Error::MissingClass));
        assert_eq!(roc(&[]), Err(Error::MissingClass));
    }

    #[test]
    fn separated_scores_reach_full_tpr() {
        let s = vec![
            (0.9, true),
            (0.8, true),
            (0.2, false),
            (0.1, false),
            (0.05, false),
        ];
        let c = roc(&s).unwrap();
        let ops = tpr_at_fpr(&c, &[0.0, 0.34, 1.0]);
        assert!(ops.iter().all(|o| o.tpr == 1.0));
        assert!(!ops[0].resolvable && ops[1].resolvable);
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (1.0, 1.0));
        assert_eq!((last.fpr, last.tpr), (0.0, 0.0));
    }

    #[test]
    fn identical_distributions_follow_chance_line() {
        let s: Vec<(f64, bool)> = (0..50)
            .flat_map(|k| [(k as f64, true), (k as f64, false)])
            .collect();
        let c = roc(&s).unwrap();
        assert!(c.points.iter().all(|p| p.tpr == p.fpr));
    }

    #[test]
    fn ties_are_accepted_together() {
        let c = roc(&[(0.5, true), (0.5, false), (0.1, false)]).unwrap();
        assert_eq!(c.points.len(), 3);
        assert_eq!(
            (c.points[1].true_accepts, c.points[1].false_accepts),
            (1, 1)
        );
    }
}
