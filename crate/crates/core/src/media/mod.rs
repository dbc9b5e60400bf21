//! Discrete periodic realizations of random media.
//!
//! A [`MediumRealization`] holds a coefficient field `a(y) ≥ 1` and an
//! exponent field `p(y) ∈ [α, β]` sampled at cell centers of a
//! [`TorusGrid`]. Generators are pure functions of `(parameters, grid, seed)`;
//! [`MediumSpec`] is the serializable description that regenerates a
//! realization from metadata alone.

mod birkhoff;
mod grid;
mod laminate;
mod mollify;
mod percolation;
mod voronoi;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use birkhoff::{birkhoff_identity_check, BirkhoffReport, WindowDiscrepancy};
pub use grid::{TorusGrid, DIM};
pub use laminate::{checkerboard_medium, constant_medium, laminate_medium};
pub use mollify::mollify_exponent;
pub use percolation::{bernoulli_percolation_medium, ClusterSummary, WrappingUnionFind};
pub use voronoi::{sample_poisson_points, voronoi_exponent_medium, ExponentLaw, PointSet};

use crate::{Error, Result};

/// Closed exponent range `[alpha, beta]` with `1 < alpha ≤ beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBounds {
    pub alpha: f64,
    pub beta: f64,
}

impl ExponentBounds {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= beta && beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exponent bounds must satisfy 1 < alpha <= beta < inf, got [{alpha}, {beta}]"
            )));
        }
        Ok(ExponentBounds { alpha, beta })
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.alpha && p <= self.beta
    }
}

/// How a realization was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Constant,
    Laminate {
        axis: usize,
        layers: usize,
    },
    Checkerboard {
        block: usize,
    },
    Voronoi {
        intensity: f64,
        sites: usize,
        resamples: u32,
    },
    Percolation {
        q: f64,
        wrapping: bool,
        cluster_cells: usize,
        wrapping_components: usize,
    },
    Mollified {
        radius: f64,
        parent: Box<Provenance>,
    },
}

/// One sampled periodic realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumRealization {
    pub grid: TorusGrid,
    pub a: Vec<f64>,
    pub p: Vec<f64>,
    pub seed: u64,
    pub bounds: ExponentBounds,
    pub provenance: Provenance,
}

impl MediumRealization {
    /// Checks field lengths, `a ≥ 1` and `α ≤ p ≤ β`.
    pub fn new(
        grid: TorusGrid,
        a: Vec<f64>,
        p: Vec<f64>,
        seed: u64,
        bounds: ExponentBounds,
        provenance: Provenance,
    ) -> Result<Self> {
        if a.len() != grid.len() || p.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field length mismatch: grid has {} cells, a has {}, p has {}",
                grid.len(),
                a.len(),
                p.len()
            )));
        }
        if let Some(k) = a.iter().position(|&v| !(v >= 1.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!("coefficient a = {} < 1 at cell {k}", a[k])));
        }
        if let Some(k) = p.iter().position(|&v| !bounds.contains(v)) {
            return Err(Error::InvalidInput(format!(
                "exponent p = {} outside [{}, {}] at cell {k}",
                p[k], bounds.alpha, bounds.beta
            )));
        }
        Ok(MediumRealization {
            grid,
            a,
            p,
            seed,
            bounds,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Smallest and largest exponent actually present.
    pub fn exponent_range(&self) -> (f64, f64) {
        min_max(&self.p)
    }

    pub fn coefficient_range(&self) -> (f64, f64) {
        min_max(&self.a)
    }

    pub fn is_homogeneous(&self) -> bool {
        let (a0, a1) = self.coefficient_range();
        let (p0, p1) = self.exponent_range();
        a0 == a1 && p0 == p1
    }

    /// Fraction of cells where `p` equals `value` exactly.
    pub fn exponent_fraction(&self, value: f64) -> f64 {
        self.p.iter().filter(|&&v| v == value).count() as f64 / self.len() as f64
    }
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// Generator description; regenerates a realization given a grid and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MediumSpec {
    Constant {
        a: f64,
        p: f64,
    },
    Laminate {
        axis: usize,
        a: Vec<f64>,
        p: Vec<f64>,
    },
    Checkerboard {
        block: usize,
        a: [f64; 2],
        p: [f64; 2],
    },
    Voronoi {
        intensity: f64,
        law: ExponentLaw,
        a_value: f64,
        #[serde(default)]
        mollify_radius: f64,
    },
    Percolation {
        q: f64,
        alpha: f64,
        beta: f64,
    },
}

impl MediumSpec {
    /// Exponent range every realization of this spec lies in.
    pub fn bounds(&self) -> Result<ExponentBounds> {
        match self {
            MediumSpec::Constant { p, .. } => ExponentBounds::new(*p, *p),
            MediumSpec::Laminate { p, .. } => {
                let (lo, hi) = min_max(p);
                ExponentBounds::new(lo, hi)
            }
            MediumSpec::Checkerboard { p, .. } => ExponentBounds::new(p[0].min(p[1]), p[0].max(p[1])),
            MediumSpec::Voronoi { law, .. } => law.bounds(),
            MediumSpec::Percolation { alpha, beta, .. } => ExponentBounds::new(*alpha, *beta),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            MediumSpec::Constant { .. } => "constant",
            MediumSpec::Laminate { .. } => "laminate",
            MediumSpec::Checkerboard { .. } => "checkerboard",
            MediumSpec::Voronoi { mollify_radius, .. } if *mollify_radius > 0.0 => "mollified",
            MediumSpec::Voronoi { .. } => "voronoi",
            MediumSpec::Percolation { .. } => "percolation",
        }
    }

    /// Samples one realization. Deterministic in `(self, grid, seed)`.
    pub fn generate(&self, grid: TorusGrid, seed: u64) -> Result<MediumRealization> {
        match self {
            MediumSpec::Constant { a, p } => constant_medium(grid, *a, *p),
            MediumSpec::Laminate { axis, a, p } => laminate_medium(grid, *axis, a, p),
            MediumSpec::Checkerboard { block, a, p } => checkerboard_medium(grid, *block, *a, *p),
            MediumSpec::Voronoi {
                intensity,
                law,
                a_value,
                mollify_radius,
            } => {
                let points = sample_poisson_points(grid, *intensity, seed)?;
                let medium = voronoi_exponent_medium(&points, grid, law, *a_value, seed)?;
                if *mollify_radius > 0.0 {
                    mollify_exponent(&medium, *mollify_radius)
                } else {
                    Ok(medium)
                }
            }
            MediumSpec::Percolation { q, alpha, beta } => bernoulli_percolation_medium(grid, *q, *alpha, *beta, seed),
        }
        .map(|mut m| {
            m.seed = seed;
            m
        })
    }
}

/// Self-describing JSON container: regeneration metadata plus cached fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MediumFile {
    pub spec: MediumSpec,
    pub realization: MediumRealization,
}

impl MediumFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Regenerates from the metadata and checks it matches the cached arrays.
    pub fn regenerate(&self) -> Result<MediumRealization> {
        let r = &self.realization;
        self.spec.generate(r.grid, r.seed)
    }
}
