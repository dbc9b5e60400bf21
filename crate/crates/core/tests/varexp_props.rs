use proptest::prelude::*;
use rheohom::varexp::{
    alpha_star, exponent_gate, growth_samples, luxemburg_norm_scalar, modular, power_law, verify_growth, StressLaw,
    SymTensor,
};

fn tensor() -> impl Strategy<Value = SymTensor> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| SymTensor::new(a, b, c))
}

fn exponent() -> impl Strategy<Value = f64> {
    1.3..4.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn stress_is_monotone(a in 1.0..5.0f64, p in exponent(), x in tensor(), y in tensor()) {
        let (_, sx) = power_law(a, p, x);
        let (_, sy) = power_law(a, p, y);
        let gap = (sx - sy).dot(&(x - y));
        let scale = (sx.norm() + sy.norm()) * (x.norm() + y.norm());
        prop_assert!(gap >= -1e-12 * scale.max(1.0));
    }
}

proptest! {
    #[test]
    fn stress_is_odd(a in 1.0..5.0f64, p in exponent(), x in tensor()) {
        let (fp, sp) = power_law(a, p, x);
        let (fm, sm) = power_law(a, p, -x);
        prop_assert!((sp + sm).norm() <= 1e-14 * sp.norm().max(1.0));
        prop_assert!((fp - fm).abs() <= 1e-14 * fp.max(1.0));
    }

    #[test]
    fn stress_is_potential_gradient(a in 1.0..5.0f64, p in exponent(), x in tensor()) {
        prop_assume!(x.norm() > 0.05);
        let h = 1e-5;
        let (_, s) = power_law(a, p, x);
        // Directional derivatives along the three Frobenius-orthonormal basis tensors.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for e in [SymTensor::diag(1.0, 0.0), SymTensor::diag(0.0, 1.0), SymTensor::shear(r)] {
            let fd = (power_law(a, p, x + h * e).0 - power_law(a, p, x - h * e).0) / (2.0 * h);
            let exact = s.dot(&e);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "fd {fd} vs {exact}");
        }
    }

    #[test]
    fn luxemburg_is_homogeneous(
        vals in prop::collection::vec(0.0..4.0f64, 1..32),
        ps in prop::collection::vec(1.5..3.5f64, 32),
        t in 0.1..10.0f64,
    ) {
        let n = vals.len();
        let p = &ps[..n];
        let w = vec![1.0 / n as f64; n];
        let base = luxemburg_norm_scalar(&vals, p, &w);
        let scaled: Vec<f64> = vals.iter().map(|v| t * v).collect();
        let got = luxemburg_norm_scalar(&scaled, p, &w);
        prop_assert!((got - t * base).abs() <= 1e-8 * (t * base).max(1e-300));
    }

    #[test]
    fn luxemburg_unit_ball(
        vals in prop::collection::vec(0.01..4.0f64, 1..32),
        ps in prop::collection::vec(1.5..3.5f64, 32),
    ) {
        let n = vals.len();
        let p = &ps[..n];
        let w = vec![1.0 / n as f64; n];
        let lam = luxemburg_norm_scalar(&vals, p, &w);
        let normalized: Vec<f64> = vals.iter().map(|v| v / lam).collect();
        let at_one = luxemburg_norm_scalar(&normalized, p, &w);
        prop_assert!((at_one - 1.0).abs() <= 1e-8);
        prop_assert!(modular(&vals, p, &w, lam) <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn luxemburg_matches_lambda_scan(
        vals in prop::collection::vec(0.01..4.0f64, 1..16),
        ps in prop::collection::vec(1.5..3.5f64, 16),
    ) {
        let n = vals.len();
        let p = &ps[..n];
        let w = vec![1.0 / n as f64; n];
        let lam = luxemburg_norm_scalar(&vals, p, &w);
        // Independent oracle: dense geometric scan for the smallest admissible λ.
        let (lo, hi) = (1e-3f64, 1e2f64);
        let steps = 20_000;
        let ratio = (hi / lo).powf(1.0 / steps as f64);
        let mut scan = hi;
        let mut l = lo;
        for _ in 0..=steps {
            if modular(&vals, p, &w, l) <= 1.0 {
                scan = l;
                break;
            }
            l *= ratio;
        }
        prop_assert!((lam - scan).abs() <= (ratio - 1.0) * scan * 1.01, "bisection {lam} scan {scan}");
    }
}

#[test]
fn quadratic_luxemburg_is_weighted_l2() {
    let vals = [1.0, 2.0, 3.0];
    let w = [0.2, 0.3, 0.5];
    let lam = luxemburg_norm_scalar(&vals, &[2.0; 3], &w);
    let l2 = (0.2 * 1.0 + 0.3 * 4.0 + 0.5 * 9.0f64).sqrt();
    assert!((lam - l2).abs() < 1e-9 * l2);
}

#[test]
fn gate_thresholds_in_two_dimensions() {
    assert!(alpha_star(2.0, 2).is_none());
    assert!(exponent_gate(1.85, 3.0, 2).is_ok());
    assert!(exponent_gate(1.5, 3.0, 2).is_err());
}

#[test]
fn growth_fit_holds_on_samples() {
    let law = StressLaw::from_fields(vec![1.0, 2.0, 3.0], vec![1.9, 2.5, 3.0]).unwrap();
    let report = verify_growth(&law, &growth_samples(500, 3));
    assert!(report.passed);
    assert!(report.c0 > 0.0);
    assert!(report.c1 <= report.c1_closed_form * (1.0 + 1e-9));
    assert!(report.max_violation_margin <= 1e-9);
}
