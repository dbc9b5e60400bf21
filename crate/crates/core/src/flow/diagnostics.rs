use serde::{Deserialize, Serialize};

use super::domain::{BoxOperators, MacroDomain};
use super::stepper::MacroTrajectory;
use crate::stats::linear_fit;
use crate::{Error, Result};

/// `sup_t 2E(t) + ∫₀ᵗ ∫ |Du|^{p(x)}` relative to `2E(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriBound {
    pub initial: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn apriori_bound(traj: &MacroTrajectory) -> AprioriBound {
    let initial = 2.0 * traj.initial_energy();
    let mut acc = 0.0;
    let mut bound = initial;
    for e in &traj.ledger {
        acc += e.modular;
        bound = bound.max(2.0 * e.energy_after + acc);
    }
    AprioriBound {
        initial,
        bound,
        ratio: if initial > 0.0 { bound / initial } else { 0.0 },
    }
}

/// Fits the a-priori constant on a reference run and then judges others
/// against the frozen value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriMonitor {
    pub constant: f64,
}

impl AprioriMonitor {
    pub const SAFETY: f64 = 1.25;

    pub fn fit(reference: &MacroTrajectory) -> Self {
        AprioriMonitor {
            constant: Self::SAFETY * apriori_bound(reference).ratio.max(1.0),
        }
    }

    pub fn holds(&self, traj: &MacroTrajectory) -> bool {
        apriori_bound(traj).ratio <= self.constant
    }
}

/// `∫₀ᵀ ‖|u|²‖_{L^{α'}} dt` with the trapezoid rule over stored states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvectiveIntegrability {
    pub alpha: f64,
    pub conjugate: f64,
    pub norms: Vec<f64>,
    pub integral: f64,
    pub finite: bool,
}

pub fn convective_integrability(traj: &MacroTrajectory, alpha: f64) -> Result<ConvectiveIntegrability> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must exceed 1")));
    }
    let q = alpha / (alpha - 1.0);
    let ops = BoxOperators::new(traj.domain.cells);
    let h2 = ops.spacing().powi(2);
    let norms: Vec<f64> = traj
        .states
        .iter()
        .map(|s| {
            let sum: f64 = ops
                .cell_velocities(&s.psi)
                .iter()
                .map(|u| (u[0] * u[0] + u[1] * u[1]).powf(q) * h2)
                .sum();
            sum.powf(1.0 / q)
        })
        .collect();
    let integral = traj
        .states
        .windows(2)
        .zip(norms.windows(2))
        .map(|(s, v)| 0.5 * (s[1].time - s[0].time) * (v[0] + v[1]))
        .sum::<f64>();
    Ok(ConvectiveIntegrability {
        alpha,
        conjugate: q,
        finite: integral.is_finite() && norms.iter().all(|v| v.is_finite()),
        norms,
        integral,
    })
}

/// Smooth no-slip test stream functions for weak-continuity checks.
pub fn test_stream_functions(domain: &MacroDomain, count: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let n = domain.cells;
    let h = domain.spacing();
    (0..count)
        .map(|m| {
            let (kx, ky) = ((m % 3 + 1) as f64, (m / 3 + 1) as f64);
            let mut phi = Vec::with_capacity(domain.unknowns());
            for i in 1..n {
                for j in 1..n {
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    let env = (PI * x).sin().powi(2) * (PI * y).sin().powi(2);
                    phi.push(env * (kx * PI * x + 0.3 * m as f64).cos() * (ky * PI * y).cos());
                }
            }
            phi
        })
        .collect()
}

/// `max_φ |(u(t) − u(0), φ)| / ‖φ‖` at the first few stored times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakContinuityProbe {
    pub times: Vec<f64>,
    pub defects: Vec<f64>,
    /// Fitted exponent of `defect ~ t^s`.
    pub slope: f64,
    pub passed: bool,
}

pub fn weak_continuity_at_zero(traj: &MacroTrajectory, tests: usize, states: usize) -> Result<WeakContinuityProbe> {
    let k = states.min(traj.states.len().saturating_sub(1));
    if k < 2 {
        return Err(Error::InvalidInput("need at least two stored steps".into()));
    }
    let ops = BoxOperators::new(traj.domain.cells);
    let phis = test_stream_functions(&traj.domain, tests);
    let gphis: Vec<Vec<f64>> = phis
        .iter()
        .map(|phi| {
            let mut g = vec![0.0; phi.len()];
            ops.apply_g(phi, &mut g);
            g
        })
        .collect();
    let psi0 = &traj.states[0].psi;
    let mut times = Vec::with_capacity(k);
    let mut defects = Vec::with_capacity(k);
    for s in &traj.states[1..=k] {
        let d = phis
            .iter()
            .zip(&gphis)
            .map(|(phi, gphi)| {
                let pair: f64 = s.psi.iter().zip(psi0).zip(gphi).map(|((a, b), g)| (a - b) * g).sum();
                let norm: f64 = phi.iter().zip(gphi).map(|(a, b)| a * b).sum::<f64>().sqrt();
                pair.abs() / norm
            })
            .fold(0.0, f64::max);
        times.push(s.time);
        defects.push(d);
    }
    let positive = defects.iter().all(|&d| d > 0.0);
    let slope = if positive {
        let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ly: Vec<f64> = defects.iter().map(|d| d.ln()).collect();
        linear_fit(&lx, &ly).slope
    } else {
        f64::INFINITY
    };
    // A flow at rest is trivially continuous.
    let passed = !positive && defects.iter().all(|&d| d == 0.0) || slope > 0.0;
    Ok(WeakContinuityProbe {
        times,
        defects,
        slope,
        passed,
    })
}

/// `‖ψ_a − ψ_b‖_G` for two stream functions on the same grid.
pub fn energy_distance(ops: &BoxOperators, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (2.0 * ops.kinetic_energy(&d)).sqrt()
}

/// Final-time changes under repeated halving of the step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRefinement {
    pub dts: [f64; 3],
    /// `‖ψ_Δt(T) − ψ_{Δt/2}(T)‖` and `‖ψ_{Δt/2}(T) − ψ_{Δt/4}(T)‖`.
    pub changes: [f64; 2],
    pub observed_order: f64,
    pub completed: bool,
    pub passed: bool,
}

pub fn time_refinement_study<F>(domain: &MacroDomain, run: F) -> Result<TimeRefinement>
where
    F: Fn(&MacroDomain) -> Result<MacroTrajectory>,
{
    let dts = [domain.dt, domain.dt / 2.0, domain.dt / 4.0];
    let mut finals = Vec::with_capacity(3);
    let mut completed = true;
    for dt in dts {
        let d = MacroDomain::new(domain.cells, domain.horizon, dt, domain.convection)?;
        let t = run(&d)?;
        completed &= t.completed;
        finals.push(t.states.last().map(|s| s.psi.clone()).unwrap_or_default());
    }
    let ops = BoxOperators::new(domain.cells);
    let changes = [
        energy_distance(&ops, &finals[0], &finals[1]),
        energy_distance(&ops, &finals[1], &finals[2]),
    ];
    Ok(TimeRefinement {
        dts,
        changes,
        observed_order: (changes[0] / changes[1]).log2(),
        completed,
        passed: completed && (changes[1] < changes[0] || changes[0] == 0.0),
    })
}
