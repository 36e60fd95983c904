//! Pairwise hinge on the score-weighted inner product
//! `<f1, f2>_r = r(f1) r(f2) cos α`:
//!
//! ```text
//! L = max(0, y (Δ - r1 r2 cos α))
//! ```
//!
//! Positive pairs with small weighted similarity push the product up,
//! negative pairs with large weighted similarity push it down.

use crate::pairs::Label;

pub const DEFAULT_MARGIN: f64 = 0.5;

fn hinge_argument(r1: f64, r2: f64, cos_alpha: f64, y: Label, margin: f64) -> f64 {
    y.sign() * (margin - r1 * r2 * cos_alpha)
}

pub fn pair_loss(r1: f64, r2: f64, cos_alpha: f64, y: Label, margin: f64) -> f64 {
    hinge_argument(r1, r2, cos_alpha, y, margin).max(0.0)
}

/// `(dL/dr1, dL/dr2)`. A hinge argument of exactly zero counts as inactive.
pub fn pair_loss_grad(r1: f64, r2: f64, cos_alpha: f64, y: Label, margin: f64) -> (f64, f64) {
    if hinge_argument(r1, r2, cos_alpha, y, margin) > 0.0 {
        let s = y.sign();
        (-s * r2 * cos_alpha, -s * r1 * cos_alpha)
    } else {
        (0.0, 0.0)
    }
}
