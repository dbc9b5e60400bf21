use serde::{Deserialize, Serialize};

use super::ensemble::{Ensemble, LawKind, SolveRecord};
use crate::stats::Summary;
use crate::varexp::SymTensor;
use crate::{Error, Result};

/// Largest tolerated fraction of non-converged solves in one estimate.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

/// Applies the exclusion rule: non-converged solves are dropped and counted;
/// more than 20% dropped rejects the estimate.
pub fn screen(records: &[SolveRecord]) -> Result<Vec<SolveRecord>> {
    let kept: Vec<SolveRecord> = records.iter().filter(|r| r.converged).copied().collect();
    let failed = records.len() - kept.len();
    if kept.is_empty() || failed as f64 > MAX_FAILED_FRACTION * records.len() as f64 {
        return Err(Error::EstimateRejected {
            failed,
            total: records.len(),
        });
    }
    Ok(kept)
}

fn component_summaries(fluxes: &[SymTensor]) -> [Summary; 3] {
    let pick = |f: fn(&SymTensor) -> f64| Summary::of(&fluxes.iter().map(f).collect::<Vec<_>>());
    [pick(|t| t.xx), pick(|t| t.xy), pick(|t| t.yy)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTensorEstimate {
    pub xi: SymTensor,
    pub mean: SymTensor,
    /// Component-wise standard errors of the mean.
    pub std_error: SymTensor,
    /// Component-wise ensemble variances.
    pub variance: SymTensor,
    pub realizations: usize,
    pub excluded: usize,
    pub side: f64,
    pub cells: usize,
    pub seeds: Vec<u64>,
    pub fluxes: Vec<SymTensor>,
    /// Mean coefficient-weighted energy per realization.
    pub energies: Vec<f64>,
}

impl EffectiveTensorEstimate {
    /// Standard error of the mean along a unit direction, assuming
    /// independent components (a conservative sum).
    pub fn se_norm(&self) -> f64 {
        self.std_error.norm()
    }
}

/// Monte-Carlo estimate of `A^eff(ξ)` as the ensemble mean of flux averages.
pub fn estimate_effective_tensor(xi: SymTensor, ensemble: &Ensemble, tol: f64) -> Result<EffectiveTensorEstimate> {
    let all = ensemble.solve(LawKind::Coefficient, xi, tol)?;
    let kept = screen(&all)?;
    let fluxes: Vec<SymTensor> = kept.iter().map(|r| r.flux).collect();
    let [sx, sxy, sy] = component_summaries(&fluxes);
    Ok(EffectiveTensorEstimate {
        xi,
        mean: SymTensor::new(sx.mean, sxy.mean, sy.mean),
        std_error: SymTensor::new(sx.std_error, sxy.std_error, sy.std_error),
        variance: SymTensor::new(sx.variance, sxy.variance, sy.variance),
        realizations: kept.len(),
        excluded: all.len() - kept.len(),
        side: ensemble.spec.side,
        cells: ensemble.spec.cells,
        seeds: kept.iter().map(|r| r.seed).collect(),
        fluxes,
        energies: kept.iter().map(|r| r.energy_density).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrliczIntegrandEstimate {
    pub xi: SymTensor,
    /// Mean of `|ξ + v_ξ|^p / p` over cells and realizations.
    pub f: f64,
    pub f_std_error: f64,
    /// `∇f(ξ)`: the flux average of the unit-coefficient law at its corrector.
    pub gradient: SymTensor,
    pub realizations: usize,
    pub excluded: usize,
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
}

/// Estimates `f(ξ)` from the unit-coefficient cell problem on each member.
pub fn estimate_f(xi: SymTensor, ensemble: &Ensemble, tol: f64) -> Result<OrliczIntegrandEstimate> {
    let all = ensemble.solve(LawKind::Unit, xi, tol)?;
    let kept = screen(&all)?;
    let values: Vec<f64> = kept.iter().map(|r| r.energy_density).collect();
    let s = Summary::of(&values);
    let grads: Vec<SymTensor> = kept.iter().map(|r| r.flux).collect();
    let [gx, gxy, gy] = component_summaries(&grads);
    Ok(OrliczIntegrandEstimate {
        xi,
        f: s.mean,
        f_std_error: s.std_error,
        gradient: SymTensor::new(gx.mean, gxy.mean, gy.mean),
        realizations: kept.len(),
        excluded: all.len() - kept.len(),
        seeds: kept.iter().map(|r| r.seed).collect(),
        values,
    })
}
