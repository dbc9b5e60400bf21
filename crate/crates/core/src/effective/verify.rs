use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{Ensemble, LawKind, SolveRecord};
use super::estimate::{estimate_effective_tensor, estimate_f, screen};
use super::table::{legendre_transform, PotentialTable};
use crate::cell::divergence_free_test_fields;
use crate::rng::{stream, Purpose};
use crate::stats::Summary;
use crate::varexp::{power_law, SymTensor, CONSTANT_CAP};
use crate::Result;

/// Standard errors added to every inequality gate.
pub const SLACK_SE: f64 = 3.0;
/// Multiple of the solver tolerance added to every inequality gate.
pub const SLACK_TOL: f64 = 10.0;

/// Converged records of two solves restricted to common seeds.
fn paired(a: &[SolveRecord], b: &[SolveRecord]) -> Result<Vec<(SolveRecord, SolveRecord)>> {
    let a = screen(a)?;
    let b = screen(b)?;
    Ok(a.into_iter()
        .filter_map(|x| b.iter().find(|y| y.seed == x.seed).map(|y| (x, *y)))
        .collect())
}

/// Trace-free strains in `count` directions evenly spread over `[0, π)`.
pub fn trace_free_directions(count: usize, radius: f64) -> Vec<SymTensor> {
    (0..count)
        .map(|k| SymTensor::from_polar(radius, PI * k as f64 / count as f64))
        .collect()
}

/// Random trace-free pairs with log-uniform radii in `[r_min, r_max]`.
pub fn random_trace_free_pairs(count: usize, r_min: f64, r_max: f64, seed: u64) -> Vec<(SymTensor, SymTensor)> {
    let mut rng = stream(seed, Purpose::XiPairs);
    let (lo, hi) = (r_min.ln(), r_max.ln());
    let mut draw = || SymTensor::from_polar(rng.random_range(lo..=hi).exp(), rng.random_range(0.0..2.0 * PI));
    (0..count).map(|_| (draw(), draw())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Row {
    pub xi: SymTensor,
    pub lambda: f64,
    pub exponent: f64,
    pub f_scaled: f64,
    pub f_base: f64,
    /// Mean of `f(λξ) − λ^e f(ξ)` over paired realizations.
    pub excess: f64,
    pub excess_se: f64,
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<Delta2Row>,
    pub violations: usize,
    pub passed: bool,
}

/// Checks `f(λξ) ≤ λ^α f(ξ)` for `λ ≤ 1` and `f(λξ) ≤ λ^β f(ξ)` for `λ ≥ 1`.
pub fn verify_delta2(
    xis: &[SymTensor],
    lambdas: &[f64],
    ensemble: &Ensemble,
    alpha: f64,
    beta: f64,
    tol: f64,
) -> Result<Delta2Report> {
    let mut rows = Vec::new();
    for xi in xis {
        let base = ensemble.solve(LawKind::Unit, *xi, tol)?;
        for &lambda in lambdas {
            let scaled = ensemble.solve(LawKind::Unit, lambda * *xi, tol)?;
            let pairs = paired(&scaled, &base)?;
            let mut exps = Vec::new();
            if lambda <= 1.0 {
                exps.push(alpha);
            }
            if lambda >= 1.0 {
                exps.push(beta);
            }
            for e in exps {
                let w = lambda.powf(e);
                let diffs: Vec<f64> = pairs
                    .iter()
                    .map(|(s, b)| s.energy_density - w * b.energy_density)
                    .collect();
                let d = Summary::of(&diffs);
                let fs = Summary::of(&pairs.iter().map(|p| p.0.energy_density).collect::<Vec<_>>()).mean;
                let fb = Summary::of(&pairs.iter().map(|p| p.1.energy_density).collect::<Vec<_>>()).mean;
                let slack = SLACK_SE * d.std_error + SLACK_TOL * tol * (fs.abs() + w * fb.abs());
                rows.push(Delta2Row {
                    xi: *xi,
                    lambda,
                    exponent: e,
                    f_scaled: fs,
                    f_base: fb,
                    excess: d.mean,
                    excess_se: d.std_error,
                    slack,
                    passed: d.mean <= slack,
                });
            }
        }
    }
    let violations = rows.iter().filter(|r| !r.passed).count();
    Ok(Delta2Report {
        alpha,
        beta,
        rows,
        violations,
        passed: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityGrowthRow {
    pub xi: SymTensor,
    pub flux: SymTensor,
    pub a_dot_xi: f64,
    pub f: f64,
    pub f_star_of_flux: f64,
    pub f_star_lower_bound_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityGrowthReport {
    /// Largest `c₀` with `A^eff(ξ)·ξ ≥ c₀ f(ξ) − 1/c₀` on every row.
    pub c0: f64,
    /// Smallest `c₁` with `f*(A^eff(ξ)) ≤ c₁ f(ξ) + c₁` on every row.
    pub c1: f64,
    pub rows: Vec<CoercivityGrowthRow>,
    pub passed: bool,
}

/// Fits the coercivity and growth constants of the effective law.
///
/// Fails closed when any conjugate value is only a truncation lower bound.
pub fn verify_coercivity_growth(
    xis: &[SymTensor],
    ensemble: &Ensemble,
    f_table: &PotentialTable,
    tol: f64,
) -> Result<CoercivityGrowthReport> {
    let mut rows = Vec::with_capacity(xis.len());
    let mut c0 = CONSTANT_CAP;
    let mut c1: f64 = 0.0;
    for xi in xis {
        let a = estimate_effective_tensor(*xi, ensemble, tol)?;
        let f = estimate_f(*xi, ensemble, tol)?;
        let m = a.mean.dot(xi);
        let q = f.f;
        if q > 0.0 {
            c0 = c0.min((m + (m * m + 4.0 * q).sqrt()) / (2.0 * q));
        }
        let fs = legendre_transform(f_table, a.mean);
        c1 = c1.max(fs.value / (q + 1.0));
        rows.push(CoercivityGrowthRow {
            xi: *xi,
            flux: a.mean,
            a_dot_xi: m,
            f: q,
            f_star_of_flux: fs.value,
            f_star_lower_bound_only: fs.lower_bound_only,
        });
    }
    let c1 = c1.max(f64::MIN_POSITIVE);
    let passed = c0.is_finite()
        && c0 > 1.0 / CONSTANT_CAP
        && c1.is_finite()
        && c1 < CONSTANT_CAP
        && rows
            .iter()
            .all(|r| !r.f_star_lower_bound_only && r.f.is_finite() && r.a_dot_xi.is_finite());
    Ok(CoercivityGrowthReport { c0, c1, rows, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRow {
    pub xi1: SymTensor,
    pub xi2: SymTensor,
    /// Mean over realizations of `(A(ξ₁) − A(ξ₂))·(ξ₁ − ξ₂)`.
    pub inner: f64,
    /// Larger of the paired and the component-combined standard errors.
    pub se: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub rows: Vec<MonotonicityRow>,
    pub min_inner: f64,
    pub min_margin_in_se: f64,
    pub passed: bool,
}

pub fn verify_monotonicity(
    pairs: &[(SymTensor, SymTensor)],
    ensemble: &Ensemble,
    tol: f64,
) -> Result<MonotonicityReport> {
    let mut rows = Vec::with_capacity(pairs.len());
    for (x1, x2) in pairs {
        let a = ensemble.solve(LawKind::Coefficient, *x1, tol)?;
        let b = ensemble.solve(LawKind::Coefficient, *x2, tol)?;
        let d = *x1 - *x2;
        let pr = paired(&a, &b)?;
        let vals: Vec<f64> = pr.iter().map(|(p, q)| (p.flux - q.flux).dot(&d)).collect();
        let s = Summary::of(&vals);
        let e1 = estimate_effective_tensor(*x1, ensemble, tol)?;
        let e2 = estimate_effective_tensor(*x2, ensemble, tol)?;
        let comb = |dv: f64, w: f64, s1: f64, s2: f64| (w * dv).powi(2) * (s1 * s1 + s2 * s2);
        let se_comb = (comb(d.xx, 1.0, e1.std_error.xx, e2.std_error.xx)
            + comb(d.xy, 2.0, e1.std_error.xy, e2.std_error.xy)
            + comb(d.yy, 1.0, e1.std_error.yy, e2.std_error.yy))
        .sqrt();
        let se = s.std_error.max(se_comb);
        rows.push(MonotonicityRow {
            xi1: *x1,
            xi2: *x2,
            inner: s.mean,
            se,
            passed: s.mean > SLACK_SE * se && s.mean > 0.0,
        });
    }
    let min_inner = rows.iter().map(|r| r.inner).fold(f64::INFINITY, f64::min);
    let min_margin_in_se = rows
        .iter()
        .map(|r| if r.se > 0.0 { r.inner / r.se } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);
    Ok(MonotonicityReport {
        passed: rows.iter().all(|r| r.passed),
        rows,
        min_inner,
        min_margin_in_se,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub side: f64,
    pub cells: usize,
    pub realizations: usize,
    pub mean: SymTensor,
    /// Ensemble variances of the `xx`, `xy`, `yy` components.
    pub variance: [f64; 3],
    pub variance_se: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicLimitReport {
    pub xi: SymTensor,
    pub rows: Vec<VarianceRow>,
    pub passed: bool,
}

/// Gate: each component's variance is nonincreasing along the given
/// ensembles (ordered by size) within two standard errors of the variance
/// estimates.
pub fn verify_deterministic_limit(
    xi: SymTensor,
    ensembles: &[&Ensemble],
    tol: f64,
) -> Result<DeterministicLimitReport> {
    let mut rows = Vec::with_capacity(ensembles.len());
    for e in ensembles {
        let est = estimate_effective_tensor(xi, e, tol)?;
        let comp = |f: fn(&SymTensor) -> f64| est.fluxes.iter().map(f).collect::<Vec<_>>();
        let cs = [comp(|t| t.xx), comp(|t| t.xy), comp(|t| t.yy)];
        let var = |v: &Vec<f64>| Summary::of(v).variance;
        let vse = |v: &Vec<f64>| {
            let s = Summary::variance_std_error(v);
            if Summary::of(v).variance == 0.0 {
                0.0
            } else {
                s
            }
        };
        rows.push(VarianceRow {
            side: est.side,
            cells: est.cells,
            realizations: est.realizations,
            mean: est.mean,
            variance: [var(&cs[0]), var(&cs[1]), var(&cs[2])],
            variance_se: [vse(&cs[0]), vse(&cs[1]), vse(&cs[2])],
        });
    }
    let mut passed = true;
    for w in rows.windows(2) {
        for c in 0..3 {
            let slack = 2.0 * w[0].variance_se[c].hypot(w[1].variance_se[c]);
            passed &= w[1].variance[c] <= w[0].variance[c] + slack;
        }
    }
    Ok(DeterministicLimitReport { xi, rows, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub xi: SymTensor,
    pub sequence: Vec<SymTensor>,
    /// `|A^eff(ξ_j) − A^eff(ξ)|` from seed-paired differences.
    pub distances: Vec<f64>,
    pub distance_se: Vec<f64>,
    /// Distances never increase by more than their combined standard error.
    pub monotone_trend: bool,
    /// Final distance within `3 SE + 10 tol |A^eff(ξ)|`.
    pub passed: bool,
}

/// `ξ(1 + 2^{−j})` for `j = 1..=count`.
pub fn geometric_sequence(xi: SymTensor, count: usize) -> Vec<SymTensor> {
    (1..=count).map(|j| (1.0 + 0.5f64.powi(j as i32)) * xi).collect()
}

/// Continuity of `A^eff` along a sequence converging to `ξ`, measured on the
/// ensemble average (the only observable level of the flux here).
pub fn flux_weak_continuity_probe(
    xi: SymTensor,
    sequence: &[SymTensor],
    ensemble: &Ensemble,
    tol: f64,
) -> Result<ContinuityReport> {
    let base = ensemble.solve(LawKind::Coefficient, xi, tol)?;
    let base_est = estimate_effective_tensor(xi, ensemble, tol)?;
    let mut distances = Vec::with_capacity(sequence.len());
    let mut distance_se = Vec::with_capacity(sequence.len());
    for x in sequence {
        let s = ensemble.solve(LawKind::Coefficient, *x, tol)?;
        let pr = paired(&s, &base)?;
        let diffs: Vec<SymTensor> = pr.iter().map(|(a, b)| a.flux - b.flux).collect();
        let comp = |f: fn(&SymTensor) -> f64| Summary::of(&diffs.iter().map(f).collect::<Vec<_>>());
        let (sx, sxy, sy) = (comp(|t| t.xx), comp(|t| t.xy), comp(|t| t.yy));
        distances.push(SymTensor::new(sx.mean, sxy.mean, sy.mean).norm());
        distance_se.push(SymTensor::new(sx.std_error, sxy.std_error, sy.std_error).norm());
    }
    let monotone_trend = distances
        .windows(2)
        .zip(distance_se.windows(2))
        .all(|(d, s)| d[1] <= d[0] + s[0].hypot(s[1]));
    let passed = match (distances.last(), distance_se.last()) {
        (Some(d), Some(s)) => *d <= SLACK_SE * s + SLACK_TOL * tol * base_est.mean.norm().max(f64::MIN_POSITIVE),
        _ => true,
    };
    Ok(ContinuityReport {
        xi,
        sequence: sequence.to_vec(),
        distances,
        distance_se,
        monotone_trend,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddnessReport {
    pub zero_flux: f64,
    /// `max |A^eff(ξ) + A^eff(−ξ)| / max(1, |A^eff(ξ)|)`.
    pub max_odd_defect: f64,
    pub passed: bool,
}

/// `A^eff(0) = 0` and `A^eff(−ξ) = −A^eff(ξ)` within `10 tol`.
pub fn verify_oddness(xis: &[SymTensor], ensemble: &Ensemble, tol: f64) -> Result<OddnessReport> {
    let zero = estimate_effective_tensor(SymTensor::ZERO, ensemble, tol)?.mean.norm();
    let mut defect: f64 = 0.0;
    for xi in xis {
        let a = estimate_effective_tensor(*xi, ensemble, tol)?.mean;
        let b = estimate_effective_tensor(-*xi, ensemble, tol)?.mean;
        defect = defect.max((a + b).norm() / a.norm().max(1.0));
    }
    Ok(OddnessReport {
        zero_flux: zero,
        max_odd_defect: defect,
        passed: zero <= SLACK_TOL * tol && defect <= SLACK_TOL * tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub xi: SymTensor,
    pub f: Vec<f64>,
    /// Per realization: competitor energies (`w = 0` first).
    pub competitors: Vec<Vec<f64>>,
    /// `min (competitor − f) / max(f, tiny)`.
    pub min_relative_gap: f64,
    pub passed: bool,
}

/// Evaluates the unit-coefficient energy at `w = 0` and at `count` random
/// admissible correctors; each must be at least `f(ξ) − 10 tol f(ξ)`.
pub fn f_minimality_probe(
    xi: SymTensor,
    ensemble: &Ensemble,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<MinimalityReport> {
    let recs = screen(&ensemble.solve(LawKind::Unit, xi, tol)?)?;
    let grid = ensemble.grid();
    let tests = divergence_free_test_fields(grid, count, seed);
    let mut f = Vec::new();
    let mut competitors = Vec::new();
    let mut gap = f64::INFINITY;
    for rec in &recs {
        let m = ensemble
            .members
            .iter()
            .find(|m| m.seed == rec.seed)
            .expect("record seeds come from members");
        let energy = |w: Option<&crate::varexp::SymTensorField>, c: f64| -> f64 {
            let mut s = 0.0;
            for k in 0..m.len() {
                let e = match w {
                    Some(w) => xi + c * w.values[k],
                    None => xi,
                };
                s += power_law(1.0, m.p[k], e).0;
            }
            s / m.len() as f64
        };
        let mut row = vec![energy(None, 0.0)];
        for t in &tests {
            let rms = t.l2_norm() / grid.volume().sqrt();
            let c = 0.5 * xi.norm().max(1e-3) / rms;
            row.push(energy(Some(t), c));
        }
        for v in &row {
            gap = gap.min((v - rec.energy_density) / rec.energy_density.max(f64::MIN_POSITIVE));
        }
        f.push(rec.energy_density);
        competitors.push(row);
    }
    Ok(MinimalityReport {
        xi,
        f,
        competitors,
        min_relative_gap: gap,
        passed: gap >= -SLACK_TOL * tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub pairs: usize,
    /// `max ξ·η − f(ξ) − f*(η)`; nonpositive up to slack when the inequality holds.
    pub max_excess: f64,
    pub passed: bool,
}

/// Young inequality `ξ·η ≤ f(ξ) + f*(η)` on every table node against every
/// given `η`, with `f` taken from the tabulated samples.
pub fn young_inequality_check(f_table: &PotentialTable, etas: &[SymTensor], tol: f64) -> YoungReport {
    let nodes = f_table.grid.nodes();
    let mut excess = f64::NEG_INFINITY;
    for eta in etas {
        let fs = legendre_transform(f_table, *eta).value;
        for (x, fx) in nodes.iter().zip(&f_table.values) {
            for s in [1.0, -1.0] {
                let xs = s * *x;
                let e = xs.dot(eta) - fx - fs;
                excess = excess.max(e / (1.0 + fx.abs() + fs.abs()));
            }
        }
    }
    YoungReport {
        pairs: etas.len() * nodes.len() * 2,
        max_excess: excess,
        passed: excess <= SLACK_TOL * tol,
    }
}
