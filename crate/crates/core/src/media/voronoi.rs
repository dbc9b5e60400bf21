use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{ExponentBounds, MediumRealization, Provenance, TorusGrid, DIM};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Sites of a Poisson process on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<[f64; DIM]>,
    /// How many empty draws were discarded before a nonempty one.
    pub resamples: u32,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Homogeneous Poisson process with the given intensity (points per unit
/// volume). An empty draw is redrawn from the next sub-stream.
pub fn sample_poisson_points(grid: TorusGrid, intensity: f64, seed: u64) -> Result<PointSet> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "Poisson intensity must be positive, got {intensity}"
        )));
    }
    let mean = intensity * grid.volume();
    let law = Poisson::new(mean).map_err(|e| Error::InvalidInput(format!("Poisson mean {mean}: {e}")))?;
    for attempt in 0u32..1000 {
        let mut r = rng::sub_stream(seed, Purpose::PoissonPoints, attempt as u64);
        let count = law.sample(&mut r) as usize;
        if count == 0 {
            continue;
        }
        let points = (0..count)
            .map(|_| {
                let mut x = [0.0; DIM];
                for c in x.iter_mut() {
                    *c = r.random::<f64>() * grid.side;
                }
                x
            })
            .collect();
        return Ok(PointSet {
            points,
            resamples: attempt,
        });
    }
    Err(Error::InvalidInput(format!(
        "Poisson process with mean {mean} stayed empty after 1000 draws"
    )))
}

/// Distribution of the i.i.d. exponent marks attached to Voronoi cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ExponentLaw {
    PointMass {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `hi` with probability `prob_hi`, else `lo`.
    TwoPoint {
        lo: f64,
        hi: f64,
        prob_hi: f64,
    },
}

impl ExponentLaw {
    pub fn bounds(&self) -> Result<ExponentBounds> {
        match *self {
            ExponentLaw::PointMass { value } => ExponentBounds::new(value, value),
            ExponentLaw::Uniform { lo, hi } | ExponentLaw::TwoPoint { lo, hi, .. } => ExponentBounds::new(lo, hi),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            ExponentLaw::PointMass { value } => value,
            ExponentLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ExponentLaw::TwoPoint { lo, hi, prob_hi } => {
                if rng.random::<f64>() < prob_hi {
                    hi
                } else {
                    lo
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ExponentLaw::PointMass { value } => value,
            ExponentLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            ExponentLaw::TwoPoint { lo, hi, prob_hi } => lo + prob_hi * (hi - lo),
        }
    }
}

/// Piecewise-constant exponent on the Voronoi diagram of `points`: every
/// cell center takes the mark of its nearest site in the torus metric, the
/// lowest site index winning ties. The coefficient is constant `a_value`.
pub fn voronoi_exponent_medium(
    points: &PointSet,
    grid: TorusGrid,
    law: &ExponentLaw,
    a_value: f64,
    seed: u64,
) -> Result<MediumRealization> {
    if points.is_empty() {
        return Err(Error::InvalidInput("Voronoi medium needs at least one site".into()));
    }
    let bounds = law.bounds()?;
    let mut r = rng::stream(seed, Purpose::SiteValues);
    let marks: Vec<f64> = (0..points.len()).map(|_| law.sample(&mut r)).collect();
    let owner = nearest_sites(&points.points, grid);
    let p = owner.iter().map(|&s| marks[s]).collect();
    MediumRealization::new(
        grid,
        vec![a_value; grid.len()],
        p,
        seed,
        bounds,
        Provenance::Voronoi {
            intensity: points.len() as f64 / grid.volume(),
            sites: points.len(),
            resamples: points.resamples,
        },
    )
}

/// Nearest site per cell center (lowest index on ties).
pub(crate) fn nearest_sites(points: &[[f64; DIM]], grid: TorusGrid) -> Vec<usize> {
    (0..grid.len())
        .map(|k| {
            let c = grid.center(k);
            let mut best = (f64::INFINITY, 0usize);
            for (s, x) in points.iter().enumerate() {
                let d = grid.torus_dist2(c, *x);
                if d < best.0 {
                    best = (d, s);
                }
            }
            best.1
        })
        .collect()
}
