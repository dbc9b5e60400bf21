use serde::{Deserialize, Serialize};

use super::domain::{BoxOperators, InitialCondition, MacroDomain};
use super::law::{fine_node_law, EffectiveLawTable, TableLaw};
use crate::media::MediumRealization;
use crate::ncg::{self, NcgOptions, Objective};
use crate::varexp::{SiteLaw, SymTensor};
use crate::{Error, Result};

/// Largest admitted per-step excess in the discrete energy inequality.
pub const ENERGY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FlowMode {
    Fine { eps: f64 },
    Homogenized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Relative stationarity tolerance of each viscous minimization.
    pub tol: f64,
    pub max_iter: usize,
    pub fixed_point_tol: f64,
    pub max_fixed_point: usize,
    pub max_halvings: usize,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            tol: 1e-10,
            max_iter: 3000,
            fixed_point_tol: 1e-14,
            max_fixed_point: 80,
            max_halvings: 10,
        }
    }
}

/// Velocity at one output time; `u = (∂₂ψ, −∂₁ψ)` is divergence-free for
/// any `ψ` and vanishes on the walls because `ψ` is zero there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityState {
    pub time: f64,
    pub kinetic_energy: f64,
    /// Interior stream function.
    #[serde(skip)]
    pub psi: Vec<f64>,
}

/// One accepted (sub)step of the energy ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub energy_before: f64,
    /// After the convective substep; equals `energy_before` up to roundoff.
    pub energy_convected: f64,
    pub energy_after: f64,
    /// `Δt Σ w A·Du h²` at the new state.
    pub dissipation: f64,
    /// `Δt Σ w |Du|^{p(x)} h²`; zero when no exponent field is attached.
    pub modular: f64,
    /// `E_after + dissipation − E_before`; at most [`ENERGY_SLACK`].
    pub excess: f64,
    pub iterations: usize,
    pub residual: f64,
    pub extrapolated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroTrajectory {
    pub mode: FlowMode,
    pub domain: MacroDomain,
    pub initial_condition: InitialCondition,
    /// State at `t = 0` and after every base step.
    pub states: Vec<VelocityState>,
    pub ledger: Vec<LedgerEntry>,
    pub halvings: usize,
    pub completed: bool,
    pub abort_reason: Option<String>,
}

impl MacroTrajectory {
    pub fn max_excess(&self) -> f64 {
        self.ledger.iter().map(|e| e.excess).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn energy_inequality_holds(&self) -> bool {
        self.ledger.iter().all(|e| e.excess <= ENERGY_SLACK)
    }

    pub fn dt_history(&self) -> Vec<f64> {
        self.ledger.iter().map(|e| e.dt).collect()
    }

    pub fn total_extrapolations(&self) -> usize {
        self.ledger.iter().map(|e| e.extrapolated).sum()
    }

    pub fn initial_energy(&self) -> f64 {
        self.states.first().map_or(0.0, |s| s.kinetic_energy)
    }
}

struct StepObjective<'a, L: SiteLaw + ?Sized> {
    ops: &'a BoxOperators,
    law: &'a L,
    weights: &'a [f64],
    psi_star: &'a [f64],
    dt: f64,
    a_ref: f64,
    energy_ref: f64,
    strain: Vec<SymTensor>,
    tau: Vec<SymTensor>,
    diff: Vec<f64>,
    gdiff: Vec<f64>,
    adj: Vec<f64>,
}

impl<L: SiteLaw + ?Sized> Objective for StepObjective<'_, L> {
    fn dim(&self) -> usize {
        self.psi_star.len()
    }

    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        let h2 = self.ops.spacing().powi(2);
        for ((d, a), b) in self.diff.iter_mut().zip(x).zip(self.psi_star) {
            *d = a - b;
        }
        self.ops.apply_g(&self.diff, &mut self.gdiff);
        let kin = 0.5 * ncg::dot(&self.diff, &self.gdiff) / self.dt;
        self.ops.strain(x, &mut self.strain);
        let mut diss = 0.0;
        for (k, (e, t)) in self.strain.iter().zip(self.tau.iter_mut()).enumerate() {
            let (phi, s) = self.law.evaluate(k, *e);
            let w = self.weights[k] * h2;
            diss += w * phi;
            *t = w * s;
        }
        self.ops.strain_adjoint(&self.tau, &mut self.adj);
        for ((g, a), b) in grad.iter_mut().zip(&self.gdiff).zip(&self.adj) {
            *g = a / self.dt + b;
        }
        kin + diss
    }

    fn precondition(&mut self, grad: &[f64], out: &mut [f64]) {
        self.ops.precondition(grad, self.dt, self.a_ref, out);
    }

    fn residual(&self, grad: &[f64], pgrad: &[f64]) -> f64 {
        let d = (self.dt * ncg::dot(grad, pgrad)).max(0.0).sqrt();
        if d == 0.0 {
            0.0
        } else {
            d / self.energy_ref.sqrt()
        }
    }
}

struct Integrator<'a, L: SiteLaw + ?Sized> {
    ops: BoxOperators,
    law: &'a L,
    exponents: Option<&'a [f64]>,
    weights: Vec<f64>,
    opts: StepOptions,
    convection: bool,
    ledger: Vec<LedgerEntry>,
    halvings: usize,
    take_extrapolations: &'a dyn Fn() -> usize,
}

impl<L: SiteLaw + ?Sized> Integrator<'_, L> {
    fn g_norm(&self, v: &[f64]) -> f64 {
        2.0 * self.ops.kinetic_energy(v)
    }

    /// Midpoint (Cayley) convective substep; `None` if the fixed point does
    /// not contract at this step size.
    fn convect(&self, psi_n: &[f64], dt: f64) -> Option<Vec<f64>> {
        let h2 = self.ops.spacing().powi(2);
        let base = self.g_norm(psi_n).sqrt();
        if base == 0.0 {
            return Some(psi_n.to_vec());
        }
        let mut psi = psi_n.to_vec();
        let mut bar = vec![0.0; psi.len()];
        let mut force = vec![0.0; psi.len()];
        let mut corr = vec![0.0; psi.len()];
        let mut prev = f64::INFINITY;
        for _ in 0..self.opts.max_fixed_point {
            for ((b, a), c) in bar.iter_mut().zip(&psi).zip(psi_n) {
                *b = 0.5 * (a + c);
            }
            let u = self.ops.face_velocities(&bar);
            let mut q = vec![0.0; u.len()];
            self.ops.skew_advection(&u, &u, &mut q);
            self.ops.face_adjoint(&q, &mut force);
            force.iter_mut().for_each(|f| *f *= h2);
            self.ops.solve_g(&force, &mut corr);
            let next: Vec<f64> = psi_n.iter().zip(&corr).map(|(a, c)| a - dt * c).collect();
            let inc: Vec<f64> = next.iter().zip(&psi).map(|(a, b)| a - b).collect();
            let inc = self.g_norm(&inc).sqrt();
            psi = next;
            if inc <= self.opts.fixed_point_tol * base {
                return Some(psi);
            }
            if inc > 0.9 * prev {
                return None;
            }
            prev = inc;
        }
        None
    }

    fn viscous(&self, psi_star: &[f64], dt: f64) -> Result<(Vec<f64>, f64, f64, usize, f64)> {
        let n = psi_star.len();
        let nodes = self.weights.len();
        let h2 = self.ops.spacing().powi(2);
        let mut strain = vec![SymTensor::ZERO; nodes];
        self.ops.strain(psi_star, &mut strain);
        let wsum: f64 = self.weights.iter().sum();
        let r_rms = (strain
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * e.norm_sq())
            .sum::<f64>()
            / wsum)
            .sqrt();
        let energy_star = self.ops.kinetic_energy(psi_star);
        let mut obj = StepObjective {
            ops: &self.ops,
            law: self.law,
            weights: &self.weights,
            psi_star,
            dt,
            a_ref: self.law.stiffness_scale(r_rms),
            energy_ref: energy_star.max(f64::MIN_POSITIVE),
            strain,
            tau: vec![SymTensor::ZERO; nodes],
            diff: vec![0.0; n],
            gdiff: vec![0.0; n],
            adj: vec![0.0; n],
        };
        let mut psi = psi_star.to_vec();
        let report = ncg::minimize(
            &mut obj,
            &mut psi,
            &NcgOptions {
                tol: self.opts.tol,
                max_iter: self.opts.max_iter,
                ..NcgOptions::default()
            },
        )?;
        if !report.converged {
            return Err(Error::Solver(format!(
                "viscous substep did not converge: residual {:.3e} after {} iterations",
                report.residual, report.iterations
            )));
        }
        self.ops.strain(&psi, &mut obj.strain);
        let mut diss = 0.0;
        let mut modular = 0.0;
        for (k, e) in obj.strain.iter().enumerate() {
            let s = self.law.stress(k, *e);
            let w = self.weights[k] * h2;
            diss += w * s.dot(e);
            if let Some(p) = self.exponents {
                modular += w * e.norm().powf(p[k]);
            }
        }
        Ok((psi, dt * diss, dt * modular, report.iterations, report.residual))
    }

    fn advance(&mut self, psi: &mut Vec<f64>, dt: f64, depth: usize, step: usize, time: f64) -> Result<()> {
        let energy_before = self.ops.kinetic_energy(psi);
        let star = if self.convection {
            match self.convect(psi, dt) {
                Some(s) => s,
                None if depth < self.opts.max_halvings => {
                    self.halvings += 1;
                    self.advance(psi, 0.5 * dt, depth + 1, step, time)?;
                    return self.advance(psi, 0.5 * dt, depth + 1, step, time + 0.5 * dt);
                }
                None => {
                    return Err(Error::Solver(format!(
                        "convective substep unstable after {} halvings",
                        self.opts.max_halvings
                    )))
                }
            }
        } else {
            psi.clone()
        };
        let energy_convected = self.ops.kinetic_energy(&star);
        let (next, dissipation, modular, iterations, residual) = self.viscous(&star, dt)?;
        let energy_after = self.ops.kinetic_energy(&next);
        self.ledger.push(LedgerEntry {
            step,
            time: time + dt,
            dt,
            energy_before,
            energy_convected,
            energy_after,
            dissipation,
            modular,
            excess: energy_after + dissipation - energy_before,
            iterations,
            residual,
            extrapolated: (self.take_extrapolations)(),
        });
        *psi = next;
        Ok(())
    }
}

fn integrate<L: SiteLaw + ?Sized>(
    law: &L,
    exponents: Option<&[f64]>,
    take_extrapolations: &dyn Fn() -> usize,
    mode: FlowMode,
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> MacroTrajectory {
    let mut it = Integrator {
        ops: BoxOperators::new(domain.cells),
        law,
        exponents,
        weights: domain.node_weights(),
        opts: *opts,
        convection: domain.convection,
        ledger: Vec::new(),
        halvings: 0,
        take_extrapolations,
    };
    let mut psi = ic.stream_function(domain);
    let mut states = vec![VelocityState {
        time: 0.0,
        kinetic_energy: it.ops.kinetic_energy(&psi),
        psi: psi.clone(),
    }];
    let mut abort_reason = None;
    for step in 0..domain.steps() {
        let t = step as f64 * domain.dt;
        if let Err(e) = it.advance(&mut psi, domain.dt, 0, step, t) {
            abort_reason = Some(e.to_string());
            break;
        }
        states.push(VelocityState {
            time: (step + 1) as f64 * domain.dt,
            kinetic_energy: it.ops.kinetic_energy(&psi),
            psi: psi.clone(),
        });
    }
    MacroTrajectory {
        mode,
        domain: *domain,
        initial_condition: ic,
        states,
        ledger: it.ledger,
        halvings: it.halvings,
        completed: abort_reason.is_none(),
        abort_reason,
    }
}

/// Fine-scale run with the oscillating law `A(x/ε, Du)`.
pub fn solve_fine(
    medium: &MediumRealization,
    eps: f64,
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> Result<MacroTrajectory> {
    let law = fine_node_law(medium, eps, domain)?;
    let p = law.p.clone();
    Ok(integrate(
        &law,
        Some(&p),
        &|| 0,
        FlowMode::Fine { eps },
        ic,
        domain,
        opts,
    ))
}

/// Fine-scale scheme driven by an arbitrary node law (used for references
/// that share the fine operator exactly).
pub fn solve_with_law<L: SiteLaw + ?Sized>(
    law: &L,
    exponents: Option<&[f64]>,
    mode: FlowMode,
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> Result<MacroTrajectory> {
    if law.sites() != domain.nodes() {
        return Err(Error::InvalidInput(format!(
            "law has {} sites, the macro grid has {} nodes",
            law.sites(),
            domain.nodes()
        )));
    }
    Ok(integrate(law, exponents, &|| 0, mode, ic, domain, opts))
}

/// Homogenized run with the tabulated effective law.
pub fn solve_homogenized(
    table: &EffectiveLawTable,
    ic: InitialCondition,
    domain: &MacroDomain,
    opts: &StepOptions,
) -> Result<MacroTrajectory> {
    let law = TableLaw::new(table, domain.nodes());
    let take = || law.take_extrapolations();
    Ok(integrate(&law, None, &take, FlowMode::Homogenized, ic, domain, opts))
}
