use serde::{Deserialize, Serialize};

use super::MediumRealization;
use crate::stats::Summary;
use crate::{Error, Result};

/// Spatial-vs-ensemble comparison for one window size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiscrepancy {
    pub window: f64,
    /// Mean over realizations of the window average.
    pub spatial: Summary,
    /// RMS over realizations of (window average - ensemble average).
    pub discrepancy: f64,
    pub discrepancy_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    /// Ensemble average of the integrand at a fixed reference cell.
    pub ensemble: Summary,
    pub windows: Vec<WindowDiscrepancy>,
}

impl BirkhoffReport {
    /// Largest window: |spatial mean - ensemble mean| in combined standard errors.
    pub fn agreement_in_se(&self) -> f64 {
        let w = self.windows.last().expect("at least one window");
        let se = crate::stats::combined_se(&[self.ensemble.std_error, w.spatial.std_error]);
        let d = (w.spatial.mean - self.ensemble.mean).abs();
        if se > 0.0 {
            d / se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Discrepancy nonincreasing in window size within `k` standard errors.
    pub fn discrepancy_nonincreasing(&self, k: f64) -> bool {
        self.windows.windows(2).all(|w| {
            let se = crate::stats::combined_se(&[w[0].discrepancy_se, w[1].discrepancy_se]);
            w[1].discrepancy <= w[0].discrepancy + k * se
        })
    }
}

/// Compares `(1/|S|) ∫_S |φ(p(y), a(y))|^{p(y)} dy` over square windows `S`
/// anchored at the origin with the ensemble average of the same integrand
/// at the reference cell `0`.
pub fn birkhoff_identity_check<F>(
    ensemble: &[MediumRealization],
    functional: F,
    windows: &[f64],
) -> Result<BirkhoffReport>
where
    F: Fn(f64, f64) -> f64,
{
    if ensemble.len() < 2 {
        return Err(Error::InvalidInput(
            "Birkhoff check needs at least 2 realizations".into(),
        ));
    }
    let integrand = |m: &MediumRealization, k: usize| functional(m.p[k], m.a[k]).abs().powf(m.p[k]);
    let pointwise: Vec<f64> = ensemble.iter().map(|m| integrand(m, 0)).collect();
    let ensemble_summary = Summary::of(&pointwise);

    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let mut averages = Vec::with_capacity(ensemble.len());
        for m in ensemble {
            let g = m.grid;
            let cells = (w / g.spacing()).round() as usize;
            if cells == 0 || cells > g.cells {
                return Err(Error::InvalidInput(format!(
                    "window {w} does not fit a torus of side {}",
                    g.side
                )));
            }
            let mut s = 0.0;
            for i in 0..cells {
                for j in 0..cells {
                    s += integrand(m, g.index(i, j));
                }
            }
            averages.push(s / (cells * cells) as f64);
        }
        let sq: Vec<f64> = averages.iter().map(|v| (v - ensemble_summary.mean).powi(2)).collect();
        let sq_summary = Summary::of(&sq);
        let discrepancy = sq_summary.mean.sqrt();
        let discrepancy_se = if discrepancy > 0.0 {
            sq_summary.std_error / (2.0 * discrepancy)
        } else {
            0.0
        };
        out.push(WindowDiscrepancy {
            window: w,
            spatial: Summary::of(&averages),
            discrepancy,
            discrepancy_se,
        });
    }
    Ok(BirkhoffReport {
        ensemble: ensemble_summary,
        windows: out,
    })
}
