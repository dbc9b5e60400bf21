use serde::{Deserialize, Serialize};

use super::tensor::SymTensor;
use crate::media::MediumRealization;
use crate::{Error, Result};

/// A potential stress law indexed by grid site.
///
/// Implementors must satisfy `stress = ∇_ξ potential`, with a potential that
/// is convex in ξ. Solvers only rely on this trait, so the oscillating fine
/// law and the tabulated effective law share one code path.
pub trait SiteLaw: Sync {
    /// Number of sites the law is defined on.
    fn sites(&self) -> usize;

    /// `(Φ(y, ξ), A(y, ξ))`.
    fn evaluate(&self, site: usize, xi: SymTensor) -> (f64, SymTensor);

    fn stress(&self, site: usize, xi: SymTensor) -> SymTensor {
        self.evaluate(site, xi).1
    }

    fn potential(&self, site: usize, xi: SymTensor) -> f64 {
        self.evaluate(site, xi).0
    }

    /// Typical tangent stiffness at strain magnitude `r`, used only for
    /// preconditioning.
    fn stiffness_scale(&self, r: f64) -> f64;
}

/// `Φ = a|ξ|^p / p` and `A = a|ξ|^{p−2} ξ`, with `A(0) = 0`.
#[inline]
pub fn power_law(a: f64, p: f64, xi: SymTensor) -> (f64, SymTensor) {
    let r2 = xi.norm_sq();
    if r2 == 0.0 {
        return (0.0, SymTensor::ZERO);
    }
    let g = a * r2.powf(0.5 * p - 1.0);
    (g * r2 / p, g * xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawForm {
    PowerLaw,
}

/// `A(y, ξ) = a(y)|ξ|^{p(y)−2} ξ` on the cells of one medium realization.
#[derive(Debug, Clone)]
pub struct StressLaw {
    pub form: LawForm,
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    a_range: (f64, f64),
    p_range: (f64, f64),
}

impl StressLaw {
    pub fn power_law(medium: &MediumRealization) -> Self {
        Self::from_fields(medium.a.clone(), medium.p.clone()).expect("medium fields are validated on construction")
    }

    /// The same exponent field with `a ≡ 1`; its cell problem defines the
    /// Orlicz integrand `f`.
    pub fn unit_coefficient(medium: &MediumRealization) -> Self {
        Self::from_fields(vec![1.0; medium.len()], medium.p.clone())
            .expect("medium fields are validated on construction")
    }

    pub fn from_fields(a: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if a.len() != p.len() || a.is_empty() {
            return Err(Error::InvalidInput(format!(
                "coefficient and exponent fields must be nonempty and equal length ({} vs {})",
                a.len(),
                p.len()
            )));
        }
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput("coefficient must be positive".into()));
        }
        if p.iter().any(|v| !(v.is_finite() && *v > 1.0)) {
            return Err(Error::InvalidInput("exponent must exceed 1".into()));
        }
        let a_range = crate::media::min_max(&a);
        let p_range = crate::media::min_max(&p);
        Ok(StressLaw {
            form: LawForm::PowerLaw,
            a,
            p,
            a_range,
            p_range,
        })
    }

    pub fn exponent_range(&self) -> (f64, f64) {
        self.p_range
    }

    pub fn coefficient_range(&self) -> (f64, f64) {
        self.a_range
    }
}

impl SiteLaw for StressLaw {
    fn sites(&self) -> usize {
        self.a.len()
    }

    #[inline]
    fn evaluate(&self, site: usize, xi: SymTensor) -> (f64, SymTensor) {
        power_law(self.a[site], self.p[site], xi)
    }

    fn stiffness_scale(&self, r: f64) -> f64 {
        // Geometric mean of the extreme tangents a (p−1) r^{p−2}.
        let r = r.max(1e-3);
        let t = |a: f64, p: f64| a * (p - 1.0).max(1.0) * r.powf(p - 2.0);
        let (alo, ahi) = self.a_range;
        let (plo, phi) = self.p_range;
        let lo = t(alo, plo).min(t(alo, phi));
        let hi = t(ahi, plo).max(t(ahi, phi));
        (lo * hi).sqrt()
    }
}

/// A spatially constant power law, used for homogeneous references.
#[derive(Debug, Clone, Copy)]
pub struct UniformPowerLaw {
    pub a: f64,
    pub p: f64,
    pub sites: usize,
}

impl SiteLaw for UniformPowerLaw {
    fn sites(&self) -> usize {
        self.sites
    }

    #[inline]
    fn evaluate(&self, _site: usize, xi: SymTensor) -> (f64, SymTensor) {
        power_law(self.a, self.p, xi)
    }

    fn stiffness_scale(&self, r: f64) -> f64 {
        self.a * (self.p - 1.0).max(1.0) * r.max(1e-3).powf(self.p - 2.0)
    }
}
