use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial dimension of every grid field in this crate.
pub const DIM: usize = 2;

/// A periodic square grid of `cells × cells` cells on a torus of side `side`.
///
/// Cell `(i, j)` has index `i * cells + j`; `i` runs along axis 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub side: f64,
    pub cells: usize,
}

impl TorusGrid {
    pub fn new(side: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidInput(format!(
                "torus grid needs at least 2 cells per side, got {cells}"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidInput(format!("torus side must be positive, got {side}")));
        }
        Ok(TorusGrid { side, cells })
    }

    /// Grid of side `side` with `per_unit` cells per unit length.
    pub fn with_resolution(side: f64, per_unit: usize) -> Result<Self> {
        let cells = (side * per_unit as f64).round() as usize;
        Self::new(side, cells)
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.cells as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(DIM as i32)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(DIM as i32)
    }

    pub fn len(&self) -> usize {
        self.cells * self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i % self.cells) * self.cells + (j % self.cells)
    }

    /// Index with signed offsets, wrapping periodically.
    #[inline]
    pub fn offset(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        let n = self.cells as isize;
        let a = (i as isize + di).rem_euclid(n) as usize;
        let b = (j as isize + dj).rem_euclid(n) as usize;
        a * self.cells + b
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.cells, k % self.cells)
    }

    pub fn center(&self, k: usize) -> [f64; DIM] {
        let (i, j) = self.coords(k);
        let h = self.spacing();
        [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]
    }

    /// Cell containing a point, after periodic wrapping.
    pub fn cell_of(&self, x: [f64; DIM]) -> usize {
        let h = self.spacing();
        let n = self.cells as i64;
        let i = ((x[0] / h).floor() as i64).rem_euclid(n) as usize;
        let j = ((x[1] / h).floor() as i64).rem_euclid(n) as usize;
        i * self.cells + j
    }

    /// Squared distance under the torus metric.
    pub fn torus_dist2(&self, a: [f64; DIM], b: [f64; DIM]) -> f64 {
        let l = self.side;
        a.iter()
            .zip(&b)
            .map(|(x, y)| {
                let d = (x - y).abs() % l;
                let d = d.min(l - d);
                d * d
            })
            .sum()
    }
}
