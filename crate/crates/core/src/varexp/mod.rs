//! Variable-exponent power-law stresses, their potentials, growth-constant
//! fits, the exponent admissibility gate and Luxemburg norms.

mod gate;
mod growth;
mod law;
mod luxemburg;
mod tensor;

pub use gate::{alpha0, alpha_star, exponent_gate, GrowthConstants};
pub use growth::{growth_samples, verify_growth, GrowthReport, CONSTANT_CAP};
pub use law::{power_law, LawForm, SiteLaw, StressLaw, UniformPowerLaw};
pub use luxemburg::{luxemburg_norm, luxemburg_norm_scalar, modular};
pub use tensor::{SymTensor, SymTensorField};

/// `A(y, ξ)` for the site law.
pub fn stress_eval<L: SiteLaw + ?Sized>(law: &L, site: usize, xi: SymTensor) -> SymTensor {
    law.stress(site, xi)
}

/// `Φ(y, ξ)` for the site law.
pub fn potential_eval<L: SiteLaw + ?Sized>(law: &L, site: usize, xi: SymTensor) -> f64 {
    law.potential(site, xi)
}
