//! Ensemble estimates of the effective law and of the Orlicz integrand,
//! tabulation on trace-free strains, the numerical conjugate and the
//! verification gates for the effective law's structural properties.

mod ensemble;
mod estimate;
mod report;
mod table;
mod verify;

pub use ensemble::{Ensemble, EnsembleSpec, LawKind, SolveRecord};
pub use estimate::{
    estimate_effective_tensor, estimate_f, screen, EffectiveTensorEstimate, OrliczIntegrandEstimate,
    MAX_FAILED_FRACTION,
};
pub use report::{estimate_rows, EstimateRow, ESTIMATE_HEADER};
pub use table::{
    legendre_transform, ConjugateEstimate, MonotonicitySpotCheck, PotentialSample, PotentialTable, XiGrid,
};
pub use verify::{
    f_minimality_probe, flux_weak_continuity_probe, geometric_sequence, random_trace_free_pairs, trace_free_directions,
    verify_coercivity_growth, verify_delta2, verify_deterministic_limit, verify_monotonicity, verify_oddness,
    young_inequality_check, CoercivityGrowthReport, CoercivityGrowthRow, ContinuityReport, Delta2Report, Delta2Row,
    DeterministicLimitReport, MinimalityReport, MonotonicityReport, MonotonicityRow, OddnessReport, VarianceRow,
    YoungReport, SLACK_SE, SLACK_TOL,
};

use crate::varexp::SymTensor;
use crate::Result;

/// `ln f` and `∇f` on `grid` from unit-coefficient solves: the table whose
/// Legendre transform estimates `f*`.
pub fn estimate_f_table(grid: &XiGrid, ensemble: &Ensemble, tol: f64) -> Result<PotentialTable> {
    let nodes = grid.nodes();
    let mut values = Vec::with_capacity(nodes.len());
    let mut grads = Vec::with_capacity(nodes.len());
    for x in &nodes {
        let f = estimate_f(*x, ensemble, tol)?;
        values.push(f.f);
        grads.push(f.gradient);
    }
    PotentialTable::new(grid.clone(), values, grads)
}

/// Effective potential `W` (mean coefficient-weighted energy at the
/// corrector) and `A^eff = ∇W` on `grid`. Also returns the raw estimates.
pub fn estimate_effective_table(
    grid: &XiGrid,
    ensemble: &Ensemble,
    tol: f64,
) -> Result<(PotentialTable, Vec<EffectiveTensorEstimate>)> {
    let nodes = grid.nodes();
    let mut values = Vec::with_capacity(nodes.len());
    let mut grads = Vec::with_capacity(nodes.len());
    let mut estimates = Vec::with_capacity(nodes.len());
    for x in &nodes {
        let e = estimate_effective_tensor(*x, ensemble, tol)?;
        values.push(e.energies.iter().sum::<f64>() / e.energies.len() as f64);
        grads.push(e.mean);
        estimates.push(e);
    }
    Ok((PotentialTable::new(grid.clone(), values, grads)?, estimates))
}

/// `|ξ|^{p−2}ξ` sampled on `grid` as a potential table with coefficient `a`.
pub fn power_law_table(grid: &XiGrid, a: f64, p: f64) -> Result<PotentialTable> {
    let (v, g): (Vec<f64>, Vec<SymTensor>) = grid.nodes().iter().map(|x| crate::varexp::power_law(a, p, *x)).unzip();
    PotentialTable::new(grid.clone(), v, g)
}
