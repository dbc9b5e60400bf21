use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest admissible lower exponent for existence in dimension `d`:
/// `max{(d + √(3d² + 4d)) / (d + 2), 3d / (d + 2)}`.
pub fn alpha0(d: usize) -> f64 {
    let d = d as f64;
    ((d + (3.0 * d * d + 4.0 * d).sqrt()) / (d + 2.0)).max(3.0 * d / (d + 2.0))
}

/// Sobolev conjugate `αd / (d − α)`; `None` stands for `+∞` when `α ≥ d`.
pub fn alpha_star(alpha: f64, d: usize) -> Option<f64> {
    let d = d as f64;
    (alpha < d).then(|| alpha * d / (d - alpha))
}

/// Exponent bounds with the derived thresholds and, once fitted, the
/// coercivity and growth constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub dimension: usize,
    pub alpha: f64,
    pub beta: f64,
    pub alpha0: f64,
    /// `None` encodes `+∞`.
    pub alpha_star: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
}

impl GrowthConstants {
    /// Conjugate of the lower exponent, `α / (α − 1)`.
    pub fn alpha_conjugate(&self) -> f64 {
        self.alpha / (self.alpha - 1.0)
    }
}

/// Checks `1 < α ≤ β < ∞`, `α ≥ α₀(d)` and `β < α*`.
pub fn exponent_gate(alpha: f64, beta: f64, d: usize) -> Result<GrowthConstants> {
    if !(d == 2 || d == 3) {
        return Err(Error::Config(format!("dimension must be 2 or 3, got {d}")));
    }
    if !(alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Config("exponent bounds must be finite".into()));
    }
    if !(alpha > 1.0 && alpha <= beta) {
        return Err(Error::Config(format!(
            "exponent bounds violate 1 < alpha <= beta < inf (alpha = {alpha}, beta = {beta})"
        )));
    }
    let a0 = alpha0(d);
    if alpha < a0 {
        return Err(Error::Config(format!(
            "alpha >= alpha0(d) violated: alpha = {alpha} < alpha0({d}) = {a0:.6}"
        )));
    }
    let astar = alpha_star(alpha, d);
    if let Some(s) = astar {
        if beta >= s {
            return Err(Error::Config(format!(
                "beta < alpha* violated: beta = {beta} >= alpha* = {s:.6} (alpha = {alpha}, d = {d})"
            )));
        }
    }
    Ok(GrowthConstants {
        dimension: d,
        alpha,
        beta,
        alpha0: a0,
        alpha_star: astar,
        c0: None,
        c1: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha0_values() {
        assert!((alpha0(2) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let a3 = alpha0(3);
        assert!(a3 > 1.84 && a3 < 1.85, "{a3}");
    }

    #[test]
    fn alpha_star_branches() {
        assert_eq!(alpha_star(2.0, 2), None);
        assert!((alpha_star(2.0, 3).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn gate_decisions() {
        let e = exponent_gate(1.8, 2.5, 3).unwrap_err().to_string();
        assert!(e.contains("alpha0"), "{e}");
        let e = exponent_gate(2.0, 6.0, 3).unwrap_err().to_string();
        assert!(e.contains("alpha*"), "{e}");
        let g = exponent_gate(2.0, 4.0, 2).unwrap();
        assert_eq!(g.alpha_star, None);
        assert!(exponent_gate(1.85, 3.0, 2).is_ok());
        assert!(exponent_gate(3.0, 2.0, 2).is_err());
        assert!(exponent_gate(2.0, 3.0, 4).is_err());
    }
}
