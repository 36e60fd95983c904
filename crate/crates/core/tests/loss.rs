use iconicity_core::loss::{pair_loss, pair_loss_grad};
use iconicity_core::Label;
use proptest::prelude::*;

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Positive), Just(Label::Negative)]
}

fn unit_open() -> std::ops::Range<f64> {
    1e-6..1.0 - 1e-6
}

proptest! {
    #[test]
    fn loss_is_nonnegative(r1 in unit_open(), r2 in unit_open(), c in -1.0f64..=1.0, y in label(), m in 1e-3f64..2.0) {
        prop_assert!(pair_loss(r1, r2, c, y, m) >= 0.0);
    }

    #[test]
    fn gradient_matches_central_differences(
        r1 in 0.01f64..0.99, r2 in 0.01f64..0.99, c in -1.0f64..=1.0, y in label(), m in 1e-3f64..1.0,
    ) {
        let arg = y.sign() * (m - r1 * r2 * c);
        // The loss is bilinear on either side of the hinge, so central
        // differences are exact up to roundoff while the step stays on one side.
        let h = 1e-3;
        prop_assume!(arg.abs() > 2.0 * h);
        let (g1, g2) = pair_loss_grad(r1, r2, c, y, m);
        let n1 = (pair_loss(r1 + h, r2, c, y, m) - pair_loss(r1 - h, r2, c, y, m)) / (2.0 * h);
        let n2 = (pair_loss(r1, r2 + h, c, y, m) - pair_loss(r1, r2 - h, c, y, m)) / (2.0 * h);
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
        prop_assert!(rel(g1, n1) < 1e-8 && rel(g2, n2) < 1e-8, "{} {} {} {}", g1, n1, g2, n2);
    }

    #[test]
    fn descent_step_moves_the_product_as_tabulated(
        r1 in unit_open(), r2 in unit_open(), c in -1.0f64..=1.0, y in label(), u in 0.01f64..0.99,
    ) {
        prop_assume!(c.abs() > 1e-3);
        let p = r1 * r2 * c;
        // A margin that puts the hinge on its active side. Negative pairs
        // with negative cosine are only active for a negative margin.
        let m = match (y, c > 0.0) {
            (Label::Positive, _) => 1.0,
            (Label::Negative, true) => u * p,
            (Label::Negative, false) => -1.0,
        };
        prop_assert!(pair_loss(r1, r2, c, y, m) > 0.0);
        let (g1, g2) = pair_loss_grad(r1, r2, c, y, m);
        let eta = 1e-3;
        let after = (r1 - eta * g1) * (r2 - eta * g2);
        let decrement = (y == Label::Positive) == (c < 0.0);
        if decrement {
            prop_assert!(after < r1 * r2);
        } else {
            prop_assert!(after > r1 * r2);
        }
    }
}
