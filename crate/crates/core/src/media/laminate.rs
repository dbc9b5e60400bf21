use super::{min_max, ExponentBounds, MediumRealization, Provenance, TorusGrid};
use crate::{Error, Result};

pub fn constant_medium(grid: TorusGrid, a: f64, p: f64) -> Result<MediumRealization> {
    MediumRealization::new(
        grid,
        vec![a; grid.len()],
        vec![p; grid.len()],
        0,
        ExponentBounds::new(p, p)?,
        Provenance::Constant,
    )
}

/// Equal-thickness layers stacked along `axis` (0 or 1); layer `k` carries
/// `(a[k], p[k])`. The layer count must divide the cell count.
pub fn laminate_medium(grid: TorusGrid, axis: usize, a: &[f64], p: &[f64]) -> Result<MediumRealization> {
    if axis > 1 {
        return Err(Error::InvalidInput(format!("laminate axis must be 0 or 1, got {axis}")));
    }
    if a.is_empty() || a.len() != p.len() {
        return Err(Error::InvalidInput(format!(
            "laminate layer lists must be nonempty and of equal length ({} vs {})",
            a.len(),
            p.len()
        )));
    }
    let layers = a.len();
    if grid.cells % layers != 0 {
        return Err(Error::InvalidInput(format!(
            "{layers} layers do not divide {} cells evenly",
            grid.cells
        )));
    }
    let thick = grid.cells / layers;
    let layer_of = |k: usize| {
        let (i, j) = grid.coords(k);
        (if axis == 0 { i } else { j }) / thick
    };
    let (lo, hi) = min_max(p);
    MediumRealization::new(
        grid,
        (0..grid.len()).map(|k| a[layer_of(k)]).collect(),
        (0..grid.len()).map(|k| p[layer_of(k)]).collect(),
        0,
        ExponentBounds::new(lo, hi)?,
        Provenance::Laminate { axis, layers },
    )
}

/// Alternating `block × block` squares with values `(a[0], p[0])` and
/// `(a[1], p[1])`.
pub fn checkerboard_medium(grid: TorusGrid, block: usize, a: [f64; 2], p: [f64; 2]) -> Result<MediumRealization> {
    if block == 0 || grid.cells % (2 * block) != 0 {
        return Err(Error::InvalidInput(format!(
            "checkerboard block {block} must tile {} cells periodically",
            grid.cells
        )));
    }
    let colour = |k: usize| {
        let (i, j) = grid.coords(k);
        (i / block + j / block) % 2
    };
    MediumRealization::new(
        grid,
        (0..grid.len()).map(|k| a[colour(k)]).collect(),
        (0..grid.len()).map(|k| p[colour(k)]).collect(),
        0,
        ExponentBounds::new(p[0].min(p[1]), p[0].max(p[1]))?,
        Provenance::Checkerboard { block },
    )
}
