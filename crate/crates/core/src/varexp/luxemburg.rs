use super::tensor::SymTensorField;

const REL_TOL: f64 = 1e-10;

/// `Σ w |f/λ|^p` for magnitudes `f`.
pub fn modular(values: &[f64], p: &[f64], weights: &[f64], lambda: f64) -> f64 {
    values
        .iter()
        .zip(p)
        .zip(weights)
        .map(|((v, p), w)| {
            if *v == 0.0 {
                0.0
            } else {
                w * (v.abs() / lambda).powf(*p)
            }
        })
        .sum()
}

/// Luxemburg norm `inf{λ > 0 : Σ w |f/λ|^p ≤ 1}` of scalar magnitudes.
///
/// Bisection in `log λ` to relative width `1e-10`; the returned value is the
/// upper end of the final bracket, so its modular is at most one.
pub fn luxemburg_norm_scalar(values: &[f64], p: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(values.len(), p.len());
    assert_eq!(values.len(), weights.len());
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return 0.0;
    }
    let mass: f64 = weights.iter().sum();
    let alpha = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = sup * mass.powf(-1.0 / alpha);
    let mut hi = sup * mass.powf(1.0 / alpha).max(1.0);
    while modular(values, p, weights, lo) <= 1.0 {
        lo *= 0.5;
    }
    while modular(values, p, weights, hi) > 1.0 {
        hi *= 2.0;
    }
    while (hi - lo) > REL_TOL * hi {
        let mid = (lo * hi).sqrt();
        if modular(values, p, weights, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Luxemburg norm of a tensor field with pointwise Frobenius magnitudes.
pub fn luxemburg_norm(field: &SymTensorField, p: &[f64], weights: &[f64]) -> f64 {
    luxemburg_norm_scalar(&field.magnitudes(), p, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_unit_measure() {
        let n = 10;
        let v = vec![3.0; n];
        let p = vec![2.0; n];
        let w = vec![0.1; n];
        assert!((luxemburg_norm_scalar(&v, &p, &w) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn constant_measure_four() {
        let v = vec![2.0; 4];
        let p = vec![2.0; 4];
        let w = vec![1.0; 4];
        assert!((luxemburg_norm_scalar(&v, &p, &w) - 4.0).abs() < 4e-10);
    }

    #[test]
    fn zero_field() {
        assert_eq!(luxemburg_norm_scalar(&[0.0, 0.0], &[2.0, 3.0], &[1.0, 1.0]), 0.0);
    }
}
