use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{apriori_bound, energy_distance, AprioriMonitor};
use super::domain::{BoxOperators, InitialCondition, MacroDomain};
use super::law::EffectiveLawTable;
use super::stepper::{solve_fine, solve_homogenized, MacroTrajectory, StepOptions};
use crate::media::MediumRealization;
use crate::Result;

/// Fine-vs-homogenized discrepancy for one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// `(∫₀ᵀ ‖u_ε − u₀‖²)^{1/2}` over the stored base steps.
    pub l2_error: f64,
    /// Errors at `T/3`, `2T/3` and `T`.
    pub snapshot_errors: [f64; 3],
    pub completed: bool,
    pub energy_inequality: bool,
    pub max_excess: f64,
    pub apriori_ratio: f64,
    pub apriori_ok: bool,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub domain: MacroDomain,
    pub rows: Vec<ConvergenceRow>,
    pub apriori: AprioriMonitor,
    pub homogenized_completed: bool,
    pub homogenized_energy_inequality: bool,
    pub homogenized_extrapolations: usize,
    /// Least-squares slope of `ln error` against `ln ε`.
    pub rate: f64,
    /// `(∫₀ᵀ ‖u₀‖²)^{1/2}` of the homogenized run, the scale of the errors.
    pub reference_norm: f64,
}

/// Errors below this fraction of the reference norm count as scheme noise.
pub const SCHEME_NOISE: f64 = 1e-6;

impl ConvergenceStudy {
    /// True if the `L²(Q_T)` error strictly decreases as `ε` does.
    pub fn strictly_decreasing(&self) -> bool {
        let mut rows: Vec<&ConvergenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error)
    }

    /// Nonincreasing errors, where differences inside the scheme-noise band
    /// are not counted against the trend.
    pub fn decreasing_beyond_noise(&self) -> bool {
        let floor = SCHEME_NOISE * self.reference_norm;
        let mut rows: Vec<&ConvergenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        rows.windows(2).all(|w| w[1].l2_error <= w[0].l2_error + floor)
    }
}

fn trajectory_distance(ops: &BoxOperators, fine: &MacroTrajectory, hom: &MacroTrajectory) -> (f64, [f64; 3]) {
    let steps = fine.states.len().min(hom.states.len());
    let dt = fine.domain.dt;
    let dist: Vec<f64> = (0..steps)
        .map(|k| energy_distance(ops, &fine.states[k].psi, &hom.states[k].psi))
        .collect();
    let l2 = dist.iter().skip(1).map(|d| dt * d * d).sum::<f64>().sqrt();
    let total = fine.domain.steps();
    let at = |f: f64| {
        let k = ((total as f64 * f).round() as usize).min(steps.saturating_sub(1));
        dist[k]
    };
    (l2, [at(1.0 / 3.0), at(2.0 / 3.0), at(1.0)])
}

/// A study together with the trajectories it was computed from.
#[derive(Debug, Clone)]
pub struct ConvergenceRuns {
    pub study: ConvergenceStudy,
    pub homogenized: MacroTrajectory,
    /// One fine trajectory per `ε`, in input order.
    pub fine: Vec<MacroTrajectory>,
}

/// Runs the homogenized problem once and the fine problem for every `ε`.
///
/// The a-priori constant is fitted on the coarsest `ε` and then held fixed.
pub fn convergence_study(
    medium: &MediumRealization,
    table: &EffectiveLawTable,
    eps: &[f64],
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> Result<ConvergenceStudy> {
    Ok(convergence_runs(medium, table, eps, ic, domain, opts)?.study)
}

pub fn convergence_runs(
    medium: &MediumRealization,
    table: &EffectiveLawTable,
    eps: &[f64],
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> Result<ConvergenceRuns> {
    let hom = solve_homogenized(table, ic, domain, opts)?;
    let fine: Vec<MacroTrajectory> = eps
        .par_iter()
        .map(|&e| solve_fine(medium, e, ic, domain, opts))
        .collect::<Result<_>>()?;
    let coarsest = (0..eps.len()).max_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let apriori = coarsest.map_or(
        AprioriMonitor {
            constant: f64::INFINITY,
        },
        |k| AprioriMonitor::fit(&fine[k]),
    );
    let ops = BoxOperators::new(domain.cells);
    let rows: Vec<ConvergenceRow> = eps
        .iter()
        .zip(&fine)
        .map(|(&e, t)| {
            let (l2_error, snapshot_errors) = trajectory_distance(&ops, t, &hom);
            ConvergenceRow {
                eps: e,
                l2_error,
                snapshot_errors,
                completed: t.completed,
                energy_inequality: t.energy_inequality_holds(),
                max_excess: t.max_excess(),
                apriori_ratio: apriori_bound(t).ratio,
                apriori_ok: apriori.holds(t),
                halvings: t.halvings,
            }
        })
        .collect();
    let rate = if rows.len() >= 2 && rows.iter().all(|r| r.l2_error > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.l2_error.ln()).collect();
        crate::stats::linear_fit(&x, &y).slope
    } else {
        f64::NAN
    };
    let zero = vec![0.0; domain.unknowns()];
    let reference_norm = hom
        .states
        .iter()
        .skip(1)
        .map(|st| domain.dt * energy_distance(&ops, &st.psi, &zero).powi(2))
        .sum::<f64>()
        .sqrt();
    let study = ConvergenceStudy {
        domain: *domain,
        rows,
        apriori,
        homogenized_completed: hom.completed,
        homogenized_energy_inequality: hom.energy_inequality_holds(),
        homogenized_extrapolations: hom.total_extrapolations(),
        rate,
        reference_norm,
    };
    Ok(ConvergenceRuns {
        study,
        homogenized: hom,
        fine,
    })
}
