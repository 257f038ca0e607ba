use consilience::decomposition::{decompose, pairs_from};
use consilience::numeric;
use consilience::ScalarKind;
use proptest::prelude::*;

fn distinct_series() -> impl Strategy<Value = Vec<f64>> {
    (3usize..=50)
        .prop_flat_map(|n| prop::collection::vec(-1e3f64..1e3, n))
        .prop_filter("needs spread", |v| numeric::sample_std_dev(v) > 1e-6)
}

#[test]
fn n10_anchors() {
    let y: Vec<f64> = (1..=10).map(|v| (v * v) as f64 * 0.37).collect();
    let mean = numeric::mean(&y);
    let mean_fit = decompose(&pairs_from(&y, &[mean; 10]), ScalarKind::SampleStdDev).unwrap();
    assert!((mean_fit.c - 0.55).abs() < 1e-10);
    assert!((mean_fit.mse_tot - 0.90).abs() < 1e-10);
    let inverse: Vec<f64> = y.iter().map(|v| 2.0 * mean - v).collect();
    let inv = decompose(&pairs_from(&y, &inverse), ScalarKind::SampleStdDev).unwrap();
    assert!((inv.c + 0.8).abs() < 1e-10);
    assert!((inv.mse_tot - 3.6).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_landmarks(y in distinct_series()) {
        let n = y.len() as f64;
        let mean = numeric::mean(&y);
        let perfect = decompose(&pairs_from(&y, &y), ScalarKind::SampleStdDev).unwrap();
        prop_assert!((perfect.c - 1.0).abs() < 1e-10);

        let flat = decompose(&pairs_from(&y, &vec![mean; y.len()]), ScalarKind::SampleStdDev).unwrap();
        prop_assert!((flat.c - (n + 1.0) / (2.0 * n)).abs() < 1e-10);

        let inverse: Vec<f64> = y.iter().map(|v| 2.0 * mean - v).collect();
        let inv = decompose(&pairs_from(&y, &inverse), ScalarKind::SampleStdDev).unwrap();
        prop_assert!((inv.c + (n - 2.0) / n).abs() < 1e-10);
        prop_assert!((inv.mse_tot - 4.0 * (n - 1.0) / n).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cross_product_vanishes_for_any_scalar(
        pairs in (3usize..40).prop_flat_map(|n| (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        )),
        kind in prop_oneof![
            Just(ScalarKind::SampleStdDev),
            Just(ScalarKind::InterquartileRange),
            Just(ScalarKind::Mean),
            Just(ScalarKind::Median),
        ],
    ) {
        let (obs, md) = pairs;
        if let Ok(p) = decompose(&pairs_from(&obs, &md), kind) {
            let mean_cross = numeric::mean(
                &p.sys_err.iter().zip(&p.ran_err).map(|(s, r)| s * r).collect::<Vec<_>>(),
            );
            // Relative to the error scale, since a tiny scalar inflates every term.
            let scale = p.mse_tot.max(1.0);
            prop_assert!(mean_cross.abs() <= 1e-10 * scale, "{mean_cross} at scale {scale}");
            prop_assert!((p.mse_tot - p.mse_sys - p.mse_ran).abs() <= 1e-10 * scale);
        }
    }
}
