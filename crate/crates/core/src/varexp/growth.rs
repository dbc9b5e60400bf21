use rand::Rng;
use serde::{Deserialize, Serialize};

use super::law::{power_law, LawForm, StressLaw};
use super::tensor::SymTensor;
use crate::rng::{stream, Purpose};

/// Fitted constants above this are treated as nonexistent.
pub const CONSTANT_CAP: f64 = 1e8;

/// JSON record of a growth-constant fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub law: LawForm,
    pub alpha: f64,
    pub beta: f64,
    /// Largest `c₀` with `A·ξ ≥ c₀|ξ|^p − 1/c₀` on every sample.
    pub c0: f64,
    /// Smallest `c₁` with `|A|^{p'} ≤ c₁|ξ|^p + c₁` on every sample.
    pub c1: f64,
    /// `max a^{p'}`, an a-priori admissible `c₁` for the power law.
    pub c1_closed_form: f64,
    pub samples: usize,
    /// Largest excess of a right-hand side over its left-hand side with the
    /// fitted constants; nonpositive up to roundoff when both hold.
    pub max_violation_margin: f64,
    pub passed: bool,
}

/// Strain samples with `|ξ|` log-uniform on `[1e-3, 1e3]` plus the origin,
/// in uniformly random symmetric directions.
pub fn growth_samples(count: usize, seed: u64) -> Vec<SymTensor> {
    let mut rng = stream(seed, Purpose::XiPairs);
    let mut out = Vec::with_capacity(count + 3);
    out.push(SymTensor::ZERO);
    for k in 0..count + 2 {
        let r = match k {
            0 => 1e-3,
            1 => 1e3,
            _ => 10f64.powf(rng.random_range(-3.0..=3.0)),
        };
        let d = loop {
            let t = SymTensor::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0) * std::f64::consts::FRAC_1_SQRT_2,
                rng.random_range(-1.0..1.0),
            );
            let n = t.norm();
            if n > 1e-3 && n <= 1.0 {
                break (1.0 / n) * t;
            }
        };
        out.push(r * d);
    }
    out
}

fn distinct_pairs(law: &StressLaw) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(u64, u64)> = law
        .a
        .iter()
        .zip(&law.p)
        .map(|(a, p)| (a.to_bits(), p.to_bits()))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .into_iter()
        .map(|(a, p)| (f64::from_bits(a), f64::from_bits(p)))
        .collect()
}

/// Fits `c₀`, `c₁` for the coercivity and growth bounds over all sites and
/// samples. The fit is a finite-range certificate, not a proof.
pub fn verify_growth(law: &StressLaw, samples: &[SymTensor]) -> GrowthReport {
    let pairs = distinct_pairs(law);
    let mut c0 = CONSTANT_CAP;
    let mut c1: f64 = 0.0;
    let mut c1_closed: f64 = 0.0;
    for &(a, p) in &pairs {
        let pc = p / (p - 1.0);
        c1_closed = c1_closed.max(a.powf(pc));
        for xi in samples {
            let (_, s) = power_law(a, p, *xi);
            let m = s.dot(xi);
            let q = xi.norm().powf(p);
            if q > 0.0 {
                c0 = c0.min((m + (m * m + 4.0 * q).sqrt()) / (2.0 * q));
            }
            c1 = c1.max(s.norm().powf(pc) / (q + 1.0));
        }
    }
    let c1 = c1.max(f64::MIN_POSITIVE);
    let mut worst = f64::NEG_INFINITY;
    for &(a, p) in &pairs {
        let pc = p / (p - 1.0);
        for xi in samples {
            let (_, s) = power_law(a, p, *xi);
            let m = s.dot(xi);
            let q = xi.norm().powf(p);
            let h3 = (c0 * q - 1.0 / c0) - m;
            let h4 = s.norm().powf(pc) - c1 * (q + 1.0);
            worst = worst.max(h3 / (1.0 + m.abs())).max(h4 / (1.0 + q));
        }
    }
    let (alpha, beta) = law.exponent_range();
    let passed = c0.is_finite() && c0 > 1.0 / CONSTANT_CAP && c1.is_finite() && c1 < CONSTANT_CAP && worst <= 1e-12;
    GrowthReport {
        law: law.form,
        alpha,
        beta,
        c0,
        c1,
        c1_closed_form: c1_closed,
        samples: samples.len(),
        max_violation_margin: worst,
        passed,
    }
}
