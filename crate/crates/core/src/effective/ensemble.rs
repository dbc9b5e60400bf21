use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{solve_with_operator, CellOptions, StrainOperator};
use crate::media::{MediumRealization, MediumSpec, TorusGrid};
use crate::rng::derive_seed;
use crate::varexp::{StressLaw, SymTensor};
use crate::Result;

/// Recipe for a seed-indexed family of realizations on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub medium: MediumSpec,
    pub side: f64,
    pub cells: usize,
    pub realizations: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn member_seed(&self, index: usize) -> u64 {
        derive_seed(self.seed, &[index as u64])
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.side, self.cells)
    }
}

/// Which law a cell problem is solved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    /// `a(y)|ξ|^{p(y)−2}ξ`; its flux average is `A^eff`.
    Coefficient,
    /// `|ξ|^{p(y)−2}ξ`; its mean energy is the Orlicz integrand `f`.
    Unit,
}

/// Per-realization outcome of one cell solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub seed: u64,
    pub flux: SymTensor,
    pub energy_density: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

type CacheKey = (LawKind, [u64; 3], u64);

/// Realizations plus a memo of solved cell problems keyed by
/// `(law, ξ, tol)`. Solves are deterministic, so the memo never changes
/// results, only cost.
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub members: Vec<MediumRealization>,
    operator: StrainOperator,
    unit_coefficient: bool,
    cache: Mutex<HashMap<CacheKey, Arc<Vec<SolveRecord>>>>,
}

impl std::fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ensemble")
            .field("spec", &self.spec)
            .field("members", &self.members.len())
            .finish()
    }
}

impl Ensemble {
    /// Generates all members; realization `r` uses seed `derive(seed, r)`.
    pub fn generate(spec: EnsembleSpec) -> Result<Self> {
        let grid = spec.grid()?;
        let members = (0..spec.realizations)
            .into_par_iter()
            .map(|r| spec.medium.generate(grid, spec.member_seed(r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_members(spec, members))
    }

    pub fn from_members(spec: EnsembleSpec, members: Vec<MediumRealization>) -> Self {
        let grid = members
            .first()
            .map(|m| m.grid)
            .unwrap_or_else(|| spec.grid().expect("valid grid"));
        let unit_coefficient = members.iter().all(|m| m.a.iter().all(|&a| a == 1.0));
        Ensemble {
            spec,
            members,
            operator: StrainOperator::new(grid),
            unit_coefficient,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> TorusGrid {
        self.operator.grid()
    }

    fn key(&self, kind: LawKind, xi: SymTensor, tol: f64) -> CacheKey {
        let kind = if self.unit_coefficient {
            LawKind::Coefficient
        } else {
            kind
        };
        (kind, [xi.xx.to_bits(), xi.xy.to_bits(), xi.yy.to_bits()], tol.to_bits())
    }

    /// Seeds the memo with records persisted by an earlier run.
    pub fn prime(&self, kind: LawKind, xi: SymTensor, tol: f64, records: Vec<SolveRecord>) -> Result<()> {
        let seeds: Vec<u64> = self.members.iter().map(|m| m.seed).collect();
        if records.iter().map(|r| r.seed).ne(seeds.iter().copied()) {
            return Err(crate::Error::InvalidInput(
                "primed records do not match the ensemble seeds".into(),
            ));
        }
        let key = self.key(kind, xi, tol);
        self.cache.lock().expect("cache lock").insert(key, Arc::new(records));
        Ok(())
    }

    /// Solves the cell problem at `xi` on every member, in seed order.
    pub fn solve(&self, kind: LawKind, xi: SymTensor, tol: f64) -> Result<Arc<Vec<SolveRecord>>> {
        let key = self.key(kind, xi, tol);
        let kind = key.0;
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let opts = CellOptions {
            tol,
            keep_fields: false,
            ..CellOptions::default()
        };
        let records = self
            .members
            .par_iter()
            .map(|m| {
                let law = match kind {
                    LawKind::Coefficient => StressLaw::power_law(m),
                    LawKind::Unit => StressLaw::unit_coefficient(m),
                };
                let s = solve_with_operator(&self.operator, &law, xi, &opts, m.seed)?;
                Ok(SolveRecord {
                    seed: m.seed,
                    flux: s.flux,
                    energy_density: s.energy_density,
                    residual: s.residual,
                    iterations: s.solver.iterations,
                    converged: s.converged,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let records = Arc::new(records);
        self.cache.lock().expect("cache lock").insert(key, records.clone());
        Ok(records)
    }
}
