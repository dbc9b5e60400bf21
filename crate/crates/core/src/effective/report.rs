use serde::Serialize;

use super::estimate::EffectiveTensorEstimate;

pub const ESTIMATE_HEADER: &[&str] = &[
    "medium",
    "side",
    "cells",
    "realizations",
    "excluded",
    "xi_xx",
    "xi_xy",
    "xi_yy",
    "radius",
    "angle",
    "a_xx",
    "a_xy",
    "a_yy",
    "se_xx",
    "se_xy",
    "se_yy",
];

/// One CSV row per `(ξ, L)` cell of an effective-tensor table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub medium: String,
    pub side: f64,
    pub cells: usize,
    pub realizations: usize,
    pub excluded: usize,
    pub xi_xx: f64,
    pub xi_xy: f64,
    pub xi_yy: f64,
    pub radius: f64,
    pub angle: f64,
    pub a_xx: f64,
    pub a_xy: f64,
    pub a_yy: f64,
    pub se_xx: f64,
    pub se_xy: f64,
    pub se_yy: f64,
}

pub fn estimate_rows(medium: &str, estimates: &[EffectiveTensorEstimate]) -> Vec<EstimateRow> {
    estimates
        .iter()
        .map(|e| {
            let c = e.xi.trace_free_coords();
            EstimateRow {
                medium: medium.to_string(),
                side: e.side,
                cells: e.cells,
                realizations: e.realizations,
                excluded: e.excluded,
                xi_xx: e.xi.xx,
                xi_xy: e.xi.xy,
                xi_yy: e.xi.yy,
                radius: e.xi.norm(),
                angle: c[1].atan2(c[0]),
                a_xx: e.mean.xx,
                a_xy: e.mean.xy,
                a_yy: e.mean.yy,
                se_xx: e.std_error.xx,
                se_xy: e.std_error.xy,
                se_yy: e.std_error.yy,
            }
        })
        .collect()
}
