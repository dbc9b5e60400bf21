use serde::{Deserialize, Serialize};

use super::operator::StrainOperator;
use super::solver::{solve_with_operator, CellOptions, CellStart, FluxAverage};
use crate::media::{MediumRealization, MediumSpec, TorusGrid};
use crate::rng::derive_seed;
use crate::varexp::{SiteLaw, StressLaw, SymTensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessProbe {
    pub fluxes: Vec<FluxAverage>,
    pub max_distance: f64,
    pub all_converged: bool,
    /// `max_distance ≤ 10 · tol · max(1, |flux|)` with every run converged.
    pub agrees: bool,
}

impl UniquenessProbe {
    pub fn conclusive(&self) -> bool {
        self.all_converged
    }
}

/// Solves from `n_starts` random initial stream functions and measures the
/// spread of the resulting flux averages.
pub fn corrector_uniqueness_probe<L: SiteLaw + ?Sized>(
    grid: TorusGrid,
    law: &L,
    xi: SymTensor,
    n_starts: usize,
    opts: &CellOptions,
    seed: u64,
) -> Result<UniquenessProbe> {
    if n_starts < 2 {
        return Err(Error::InvalidInput("uniqueness probe needs at least two starts".into()));
    }
    let op = StrainOperator::new(grid);
    let mut fluxes = Vec::with_capacity(n_starts);
    let mut all_converged = true;
    for s in 0..n_starts {
        let o = CellOptions {
            start: CellStart::Random {
                seed: derive_seed(seed, &[s as u64]),
                amplitude: 1.0,
            },
            keep_fields: false,
            ..*opts
        };
        let sol = solve_with_operator(&op, law, xi, &o, seed)?;
        all_converged &= sol.converged;
        fluxes.push(sol.flux);
    }
    let mut max_distance: f64 = 0.0;
    for a in 0..n_starts {
        for b in a + 1..n_starts {
            max_distance = max_distance.max((fluxes[a] - fluxes[b]).norm());
        }
    }
    let scale = fluxes.iter().map(SymTensor::norm).fold(1.0, f64::max);
    Ok(UniquenessProbe {
        agrees: all_converged && max_distance <= 10.0 * opts.tol * scale,
        fluxes,
        max_distance,
        all_converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub cells: usize,
    pub flux: FluxAverage,
    /// `|flux(n) − flux(previous n)|`; absent for the coarsest grid.
    pub difference: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Flux averages of one geometry sampled at several resolutions.
pub fn resolution_study(
    spec: &MediumSpec,
    side: f64,
    cells: &[usize],
    seed: u64,
    xi: SymTensor,
    opts: &CellOptions,
) -> Result<Vec<ResolutionRow>> {
    let mut rows: Vec<ResolutionRow> = Vec::with_capacity(cells.len());
    for &n in cells {
        let grid = TorusGrid::new(side, n)?;
        let medium: MediumRealization = spec.generate(grid, seed)?;
        let law = StressLaw::power_law(&medium);
        let op = StrainOperator::new(grid);
        let o = CellOptions {
            keep_fields: false,
            ..*opts
        };
        let sol = solve_with_operator(&op, &law, xi, &o, seed)?;
        let difference = rows.last().map(|r| (r.flux - sol.flux).norm());
        rows.push(ResolutionRow {
            cells: n,
            flux: sol.flux,
            difference,
            converged: sol.converged,
            iterations: sol.solver.iterations,
        });
    }
    Ok(rows)
}
