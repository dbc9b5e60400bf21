//! Preconditioned nonlinear conjugate gradients for smooth convex objectives.
//!
//! Polak–Ribière+ directions with Powell restarts and a bracketing secant
//! line search on the directional derivative. The energy test carries a
//! roundoff allowance because near the minimizer the objective itself stops
//! resolving the decrease while its derivative still does.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative roundoff allowance on energy comparisons.
pub const ENERGY_ROUNDOFF: f64 = 1e-13;

pub trait Objective {
    fn dim(&self) -> usize;

    /// Returns `J(x)` and writes `∇J(x)` into `grad`.
    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64;

    /// Writes `P⁻¹ g` into `out`; `P` must be symmetric positive semidefinite.
    fn precondition(&mut self, grad: &[f64], out: &mut [f64]);

    /// Scale-free stationarity measure from `g` and `P⁻¹ g`.
    fn residual(&self, grad: &[f64], pgrad: &[f64]) -> f64 {
        dot(grad, pgrad).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcgOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Restart with the preconditioned steepest descent every this many steps.
    pub restart: usize,
    pub max_nan_halvings: usize,
}

impl Default for NcgOptions {
    fn default() -> Self {
        NcgOptions {
            tol: 1e-8,
            max_iter: 2000,
            restart: 100,
            max_nan_halvings: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcgReport {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub residual: f64,
    pub value: f64,
    /// Largest relative energy increase over accepted steps; at most
    /// [`ENERGY_ROUNDOFF`] by construction.
    pub max_energy_increase: f64,
    pub nan_halvings: usize,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy_into(out: &mut [f64], x: &[f64], t: f64, d: &[f64]) {
    for ((o, x), d) in out.iter_mut().zip(x).zip(d) {
        *o = x + t * d;
    }
}

struct Trial {
    t: f64,
    f: f64,
    slope: f64,
}

struct Workspace {
    xt: Vec<f64>,
    gt: Vec<f64>,
    evaluations: usize,
    nan_halvings: usize,
}

impl Workspace {
    fn eval<O: Objective>(
        &mut self,
        obj: &mut O,
        x: &[f64],
        d: &[f64],
        mut t: f64,
        max_halvings: usize,
    ) -> Result<Trial> {
        let mut halvings = 0;
        loop {
            axpy_into(&mut self.xt, x, t, d);
            let f = obj.value_grad(&self.xt, &mut self.gt);
            self.evaluations += 1;
            let slope = dot(&self.gt, d);
            if f.is_finite() && slope.is_finite() {
                return Ok(Trial { t, f, slope });
            }
            halvings += 1;
            self.nan_halvings += 1;
            if halvings > max_halvings {
                return Err(Error::Solver(format!(
                    "non-finite objective after {max_halvings} step halvings"
                )));
            }
            t *= 0.5;
        }
    }
}

/// Strong-Wolfe style search with flat-energy tolerance. Leaves the accepted
/// point in `ws.xt`, `ws.gt`; returns `None` if no acceptable point exists.
fn line_search<O: Objective>(
    obj: &mut O,
    ws: &mut Workspace,
    x: &[f64],
    d: &[f64],
    f0: f64,
    slope0: f64,
    t0: f64,
    opts: &NcgOptions,
) -> Result<Option<Trial>> {
    const C1: f64 = 1e-4;
    const C2: f64 = 0.1;
    let allowance = ENERGY_ROUNDOFF * f0.abs().max(f64::MIN_POSITIVE);
    let mut lo = Trial {
        t: 0.0,
        f: f0,
        slope: slope0,
    };
    let mut hi: Option<Trial> = None;
    let mut t = t0;
    for _ in 0..40 {
        let tr = ws.eval(obj, x, d, t, opts.max_nan_halvings)?;
        let armijo = tr.f <= f0 + C1 * tr.t * slope0 + allowance;
        if armijo && tr.slope.abs() <= C2 * slope0.abs() {
            return Ok(Some(tr));
        }
        if armijo && tr.slope < 0.0 {
            lo = tr;
        } else {
            hi = Some(tr);
        }
        t = match &hi {
            None => {
                // Extrapolate along a secant on the slope, capped at 4×.
                let num = lo.slope;
                let den = lo.slope - slope0;
                let guess = if lo.t > 0.0 && den > 0.0 {
                    lo.t - num * lo.t / den
                } else {
                    4.0 * lo.t
                };
                guess.clamp(1.5 * lo.t, 4.0 * lo.t)
            }
            Some(h) => {
                let w = h.t - lo.t;
                let den = h.slope - lo.slope;
                let guess = if den > 0.0 && h.slope >= 0.0 {
                    lo.t - lo.slope * w / den
                } else {
                    lo.t + 0.5 * w
                };
                guess.clamp(lo.t + 0.1 * w, h.t - 0.1 * w)
            }
        };
        if let Some(h) = &hi {
            if h.t - lo.t <= 1e-14 * h.t {
                break;
            }
        }
    }
    if lo.t > 0.0 {
        let tr = ws.eval(obj, x, d, lo.t, opts.max_nan_halvings)?;
        if tr.f <= f0 + allowance {
            return Ok(Some(tr));
        }
    }
    Ok(None)
}

/// Minimizes `obj` from `x`, overwriting `x` with the final iterate.
pub fn minimize<O: Objective>(obj: &mut O, x: &mut [f64], opts: &NcgOptions) -> Result<NcgReport> {
    let n = obj.dim();
    assert_eq!(x.len(), n);
    let mut g = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut ws = Workspace {
        xt: vec![0.0; n],
        gt: vec![0.0; n],
        evaluations: 1,
        nan_halvings: 0,
    };
    let mut f = obj.value_grad(x, &mut g);
    if !f.is_finite() {
        return Err(Error::Solver("non-finite objective at the initial iterate".into()));
    }
    obj.precondition(&g, &mut z);
    let mut res = obj.residual(&g, &z);
    let mut gz = dot(&g, &z);
    for (di, zi) in d.iter_mut().zip(&z) {
        *di = -zi;
    }
    let mut report = NcgReport {
        converged: res <= opts.tol,
        iterations: 0,
        evaluations: 1,
        residual: res,
        value: f,
        max_energy_increase: 0.0,
        nan_halvings: 0,
    };
    let mut step = 1.0;
    let mut since_restart = 0;
    let mut failures = 0;
    let mut z_new = vec![0.0; n];
    while !report.converged && report.iterations < opts.max_iter {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = -zi;
            }
            slope = -gz;
            since_restart = 0;
        }
        if slope >= 0.0 {
            break;
        }
        let found = line_search(obj, &mut ws, x, &d, f, slope, step, opts)?;
        let Some(tr) = found else {
            failures += 1;
            if failures >= 2 || since_restart == 0 {
                break;
            }
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = -zi;
            }
            since_restart = 0;
            continue;
        };
        failures = 0;
        report.iterations += 1;
        let rel_increase = (tr.f - f) / f.abs().max(f64::MIN_POSITIVE);
        report.max_energy_increase = report.max_energy_increase.max(rel_increase);
        debug_assert!(rel_increase <= ENERGY_ROUNDOFF * (1.0 + 1e-9));
        x.copy_from_slice(&ws.xt);
        f = tr.f;
        obj.precondition(&ws.gt, &mut z_new);
        let gz_new = dot(&ws.gt, &z_new);
        res = obj.residual(&ws.gt, &z_new);
        if res <= opts.tol {
            g.copy_from_slice(&ws.gt);
            report.converged = true;
            break;
        }
        since_restart += 1;
        let overlap = dot(&ws.gt, &z).abs();
        let beta = if since_restart >= opts.restart || overlap >= 0.2 * gz_new {
            since_restart = 0;
            0.0
        } else {
            ((gz_new - dot(&ws.gt, &z)) / gz).max(0.0)
        };
        let prev_slope = slope;
        for i in 0..n {
            d[i] = -z_new[i] + beta * d[i];
        }
        std::mem::swap(&mut z, &mut z_new);
        g.copy_from_slice(&ws.gt);
        gz = gz_new;
        let new_slope = dot(&g, &d);
        step = if new_slope < 0.0 {
            (tr.t * prev_slope / new_slope).clamp(1e-3 * tr.t, 1e3 * tr.t.max(1e-300))
        } else {
            tr.t
        };
        if !(step.is_finite() && step > 0.0) {
            step = 1.0;
        }
    }
    report.residual = res;
    report.value = f;
    report.evaluations = ws.evaluations;
    report.nan_halvings = ws.nan_halvings;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic {
        c: Vec<f64>,
    }

    impl Objective for Quartic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let mut f = 0.0;
            for i in 0..x.len() {
                let e = x[i] - self.c[i];
                f += 0.5 * e * e + 0.25 * e.powi(4);
                g[i] = e + e.powi(3);
            }
            f
        }
        fn precondition(&mut self, g: &[f64], out: &mut [f64]) {
            out.copy_from_slice(g);
        }
    }

    #[test]
    fn minimizes_separable_quartic() {
        let c: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let mut obj = Quartic { c: c.clone() };
        let mut x = vec![0.0; 20];
        let r = minimize(
            &mut obj,
            &mut x,
            &NcgOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        for (a, b) in x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(r.max_energy_increase <= ENERGY_ROUNDOFF);
    }

    struct Rosenbrockish;

    impl Objective for Rosenbrockish {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            // Convex but badly scaled quadratic.
            g[0] = 100.0 * x[0] + 9.0 * x[1] - 1.0;
            g[1] = 9.0 * x[0] + x[1];
            0.5 * (100.0 * x[0] * x[0] + 18.0 * x[0] * x[1] + x[1] * x[1]) - x[0]
        }
        fn precondition(&mut self, g: &[f64], out: &mut [f64]) {
            out.copy_from_slice(g);
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let mut x = vec![0.0; 2];
        let r = minimize(
            &mut Rosenbrockish,
            &mut x,
            &NcgOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.converged, "{r:?}");
        // Solution of [[100, 9], [9, 1]] x = (1, 0).
        assert!((x[0] - 1.0 / 19.0).abs() < 1e-10);
        assert!((x[1] + 9.0 / 19.0).abs() < 1e-10);
    }
}
