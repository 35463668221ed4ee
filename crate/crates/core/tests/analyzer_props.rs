use proptest::prelude::*;
use splitobs_core::analyzer::fit_decay;

proptest! {
    #[test]
    fn exact_exponentials_give_back_their_rate(
        amp in 1e-3f64..1e3,
        rate in 0.05f64..5.0,
        start in 0.0f64..2.0,
        len in 1.0f64..5.0,
        samples in 20usize..200,
    ) {
        let dt = len / samples as f64;
        let t: Vec<f64> = (0..=samples).map(|k| start + k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|&s| amp * (-rate * s).exp()).collect();
        let f = fit_decay(&t, &y, (start, start + len), 0.0).unwrap();
        prop_assert!((f.lambda_est - rate).abs() <= 1e-6, "{} vs {}", f.lambda_est, rate);
        prop_assert!(f.residual <= 1e-9);
    }
}
