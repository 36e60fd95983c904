use iconicity_core::{cosine_similarity, l2_normalize};
use proptest::prelude::*;

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #[test]
    fn cosine_is_symmetric_and_bounded((a, b) in (2usize..16).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d)))) {
        let ab = cosine_similarity(&a, &b).unwrap();
        prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn cosine_ignores_positive_scale(
        (a, b) in (2usize..16).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d))),
        s in 1e-3f64..1e3,
    ) {
        let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
        let c0 = cosine_similarity(&a, &b).unwrap();
        let c1 = cosine_similarity(&scaled, &b).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent(a in (2usize..16).prop_flat_map(nonzero_vec)) {
        let once = l2_normalize(&a).unwrap();
        let twice = l2_normalize(&once).unwrap();
        let norm = once.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        for (x, y) in once.iter().zip(&twice) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_vector_cannot_be_normalized() {
    assert!(l2_normalize(&[0.0, 0.0]).is_err());
}
