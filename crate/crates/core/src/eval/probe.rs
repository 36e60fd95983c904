use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Ridge penalty on the standardized design, always applied.
pub const PROBE_RIDGE: f64 = 1e-6;

/// Refinement passes reusing the ridge factorization. Each pass shrinks
/// the ridge bias along an eigendirection of the Gram matrix by a factor
/// `ridge / (eigenvalue + ridge)`.
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub train_rows: usize,
    pub test_rows: usize,
    /// Mean absolute error on the test split.
    pub mae: f64,
    /// Test MAE divided by the MAE of predicting the training mean. About 1
    /// when the embeddings carry no information about the covariate.
    pub relative_error: f64,
    /// Test MAE divided by the test covariate's standard deviation.
    pub mae_over_std: f64,
}

/// Fits a linear regressor from embeddings to a covariate on a seeded
/// random split and reports its test error.
///
/// Columns are standardized with training statistics, the intercept is the
/// training mean of the covariate, and the weights solve the ridge normal
/// equations by Cholesky factorization, followed by iterated-Tikhonov
/// refinement so well-determined directions reach the least-squares fit
/// while rank-deficient ones stay regularized.
pub fn linear_probe(
    features: &[&[f64]],
    covariate: &[f64],
    seed: u64,
    train_fraction: f64,
) -> Result<ProbeReport> {
    let n = features.len();
    if covariate.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: covariate.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(
            "train fraction must lie in (0, 1)".into(),
        ));
    }
    let dim = features.first().map_or(0, |f| f.len());
    if dim == 0 || features.iter().any(|f| f.len() != dim) {
        return Err(Error::Degenerate(
            "probe features must share a positive dimension",
        ));
    }
    if features
        .iter()
        .flat_map(|f| f.iter())
        .chain(covariate)
        .any(|v| !v.is_finite())
    {
        return Err(Error::Degenerate("non-finite probe input"));
    }
    let train_rows = libm::round(n as f64 * train_fraction) as usize;
    if train_rows == 0 || train_rows >= n {
        return Err(Error::Degenerate("split leaves an empty train or test set"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let (train, test) = order.split_at(train_rows);

    let t = train.len() as f64;
    let mut centre = alloc::vec![0.0; dim];
    for &k in train {
        for (c, x) in centre.iter_mut().zip(features[k]) {
            *c += x / t;
        }
    }
    let mut scale = alloc::vec![0.0; dim];
    for &k in train {
        for ((s, x), c) in scale.iter_mut().zip(features[k]).zip(&centre) {
            *s += (x - c) * (x - c) / t;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { libm::sqrt(*s) } else { 1.0 };
    }
    let y_mean = train.iter().map(|&k| covariate[k]).sum::<f64>() / t;

    let standardized = |k: usize| {
        features[k]
            .iter()
            .zip(&centre)
            .zip(&scale)
            .map(|((x, c), s)| (x - c) / s)
    };
    let x = DMatrix::from_row_iterator(
        train.len(),
        dim,
        train.iter().flat_map(|&k| standardized(k)),
    );
    let y = DVector::from_iterator(train.len(), train.iter().map(|&k| covariate[k] - y_mean));
    let gram = x.transpose() * &x;
    let mut regularized = gram.clone();
    for d in 0..dim {
        regularized[(d, d)] += PROBE_RIDGE;
    }
    let rhs = x.transpose() * y;
    let factor = regularized.cholesky().ok_or(Error::Singular)?;
    let mut weights = factor.solve(&rhs);
    for _ in 0..REFINEMENT_STEPS {
        let residual = &rhs - &gram * &weights;
        weights += factor.solve(&residual);
    }

    let m = test.len() as f64;
    let mut abs_err = 0.0;
    let mut abs_base = 0.0;
    let test_mean = test.iter().map(|&k| covariate[k]).sum::<f64>() / m;
    let mut var = 0.0;
    for &k in test {
        let pred = y_mean
            + standardized(k)
                .zip(weights.iter())
                .map(|(a, w)| a * w)
                .sum::<f64>();
        abs_err += (covariate[k] - pred).abs();
        abs_base += (covariate[k] - y_mean).abs();
        var += (covariate[k] - test_mean) * (covariate[k] - test_mean);
    }
    if abs_base == 0.0 || var == 0.0 {
        return Err(Error::Degenerate("test covariate is constant"));
    }
    let mae = abs_err / m;
    Ok(ProbeReport {
        train_rows,
        test_rows: test.len(),
        mae,
        relative_error: abs_err / abs_base,
        mae_over_std: mae / libm::sqrt(var / m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_shapes() {
        let f = [[1.0, 2.0].as_slice(), [3.0, 4.0].as_slice()];
        assert!(linear_probe(&f, &[1.0], 0, 0.6).is_err());
        assert!(linear_probe(&f, &[1.0, 2.0], 0, 1.0).is_err());
        let one = [[1.0, 2.0].as_slice()];
        assert!(linear_probe(&one, &[1.0], 0, 0.6).is_err());
    }

    #[test]
    fn exact_line_is_recovered() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|k| vec![k as f64, ((k * 7) % 11) as f64])
            .collect();
        let f: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - 2.0 * r[1] + 5.0).collect();
        let rep = linear_probe(&f, &y, 9, 0.6).unwrap();
        assert_eq!((rep.train_rows, rep.test_rows), (24, 16));
        assert!(rep.relative_error < 1e-8, "{rep:?}");
    }
}
