use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use super::domain::MacroDomain;
use crate::effective::{MonotonicitySpotCheck, PotentialTable};
use crate::media::MediumRealization;
use crate::varexp::{SiteLaw, StressLaw, SymTensor};
use crate::{Error, Result};

/// Pairs checked for monotonicity when a table is loaded.
pub const SPOT_CHECK_PAIRS: usize = 100;

/// Node-sampled fine-scale law `a(x/ε)|ξ|^{p(x/ε)−2}ξ`.
///
/// The medium is read periodically, so `x/ε` may exceed its side.
pub fn fine_node_law(medium: &MediumRealization, eps: f64, domain: &MacroDomain) -> Result<StressLaw> {
    if !(eps > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let k = 1.0 / eps;
    if (k - k.round()).abs() > 1e-9 {
        return Err(Error::Config(format!("epsilon = {eps} is not 1/k for an integer k")));
    }
    let (mut a, mut p) = (Vec::with_capacity(domain.nodes()), Vec::with_capacity(domain.nodes()));
    for node in 0..domain.nodes() {
        let x = domain.node_position(node);
        // Round to the sampling lattice so interface nodes resolve consistently.
        let y = [(x[0] * k * 1e9).round() / 1e9, (x[1] * k * 1e9).round() / 1e9];
        let c = medium.grid.cell_of(y);
        a.push(medium.a[c]);
        p.push(medium.p[c]);
    }
    StressLaw::from_fields(a, p)
}

/// Tabulated effective potential, monotonicity-checked at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveLawTable {
    pub table: PotentialTable,
    pub spot_check: MonotonicitySpotCheck,
    /// Largest relative mismatch between interpolated and tabulated stresses.
    pub gradient_consistency: f64,
    pub source: String,
}

impl EffectiveLawTable {
    /// Fails if any of the [`SPOT_CHECK_PAIRS`] random pairs violates
    /// monotonicity of the interpolated stress.
    pub fn load(table: PotentialTable, source: impl Into<String>, seed: u64) -> Result<Self> {
        let spot_check = table.monotonicity_spot_check(SPOT_CHECK_PAIRS, seed);
        if !spot_check.passed() {
            return Err(Error::InvalidInput(format!(
                "effective law table failed the monotonicity spot check ({} of {} pairs)",
                spot_check.violations, spot_check.pairs
            )));
        }
        Ok(EffectiveLawTable {
            gradient_consistency: table.gradient_consistency(),
            table,
            spot_check,
            source: source.into(),
        })
    }

    pub fn stress(&self, xi: SymTensor) -> SymTensor {
        self.table.eval(xi).gradient
    }
}

/// The tabulated law repeated on every node. Counts queries outside the
/// tabulated radius range.
#[derive(Debug)]
pub struct TableLaw<'a> {
    pub table: &'a EffectiveLawTable,
    pub sites: usize,
    extrapolated: AtomicUsize,
}

impl<'a> TableLaw<'a> {
    pub fn new(table: &'a EffectiveLawTable, sites: usize) -> Self {
        TableLaw {
            table,
            sites,
            extrapolated: AtomicUsize::new(0),
        }
    }

    /// Returns and resets the extrapolation counter.
    pub fn take_extrapolations(&self) -> usize {
        self.extrapolated.swap(0, Ordering::Relaxed)
    }
}

impl SiteLaw for TableLaw<'_> {
    fn sites(&self) -> usize {
        self.sites
    }

    fn evaluate(&self, _site: usize, xi: SymTensor) -> (f64, SymTensor) {
        let s = self.table.table.eval(xi);
        if s.extrapolated {
            self.extrapolated.fetch_add(1, Ordering::Relaxed);
        }
        (s.value, s.gradient)
    }

    fn stiffness_scale(&self, r: f64) -> f64 {
        let r = r.max(self.table.table.grid.radii[0]);
        let nd = self.table.table.grid.directions;
        let mut s = 0.0;
        for d in 0..nd {
            let x = SymTensor::from_polar(r, std::f64::consts::PI * d as f64 / nd as f64);
            s += self.table.table.eval(x).gradient.norm() / r;
        }
        s / nd as f64
    }
}
