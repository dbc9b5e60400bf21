use std::fs;
use std::path::Path;

use serde::Serialize;

use super::pipeline::{relative, FileDigest, RunManifest};
use crate::flow::{ConvergenceRow, LedgerEntry};
use crate::io::{sha256_file, write_csv};
use crate::{Error, Result};

pub const MEMBER_HEADER: &[&str] = &[
    "index", "seed", "cells", "side", "a_min", "a_max", "p_min", "p_max", "p_mean",
];

#[derive(Debug, Clone, Serialize)]
pub struct MemberRow {
    pub index: usize,
    pub seed: u64,
    pub cells: usize,
    pub side: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub p_mean: f64,
}

pub const GROWTH_HEADER: &[&str] = &[
    "seed",
    "alpha",
    "beta",
    "c0",
    "c1",
    "c1_closed_form",
    "max_violation_margin",
    "passed",
];

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c1_closed_form: f64,
    pub max_violation_margin: f64,
    pub passed: bool,
}

pub const CELL_SUMMARY_HEADER: &[&str] = &[
    "law",
    "xi_xx",
    "xi_xy",
    "xi_yy",
    "realizations",
    "converged",
    "max_residual",
    "mean_iterations",
];

#[derive(Debug, Clone, Serialize)]
pub struct CellSummaryRow {
    pub law: &'static str,
    pub xi_xx: f64,
    pub xi_xy: f64,
    pub xi_yy: f64,
    pub realizations: usize,
    pub converged: usize,
    pub max_residual: f64,
    pub mean_iterations: f64,
}

pub const F_HEADER: &[&str] = &[
    "medium",
    "side",
    "xi_xx",
    "xi_xy",
    "xi_yy",
    "f",
    "f_se",
    "grad_xx",
    "grad_xy",
    "grad_yy",
    "realizations",
    "excluded",
];

#[derive(Debug, Clone, Serialize)]
pub struct FRow {
    pub medium: &'static str,
    pub side: f64,
    pub xi_xx: f64,
    pub xi_xy: f64,
    pub xi_yy: f64,
    pub f: f64,
    pub f_std_error: f64,
    pub grad_xx: f64,
    pub grad_xy: f64,
    pub grad_yy: f64,
    pub realizations: usize,
    pub excluded: usize,
}

pub const LEDGER_HEADER: &[&str] = &[
    "step",
    "time",
    "dt",
    "energy_before",
    "energy_convected",
    "energy_after",
    "dissipation",
    "modular",
    "excess",
    "iterations",
    "residual",
    "extrapolated",
];

#[derive(Debug, Clone, Serialize)]
pub struct LedgerRow {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub energy_before: f64,
    pub energy_convected: f64,
    pub energy_after: f64,
    pub dissipation: f64,
    pub modular: f64,
    pub excess: f64,
    pub iterations: usize,
    pub residual: f64,
    pub extrapolated: usize,
}

impl From<&LedgerEntry> for LedgerRow {
    fn from(e: &LedgerEntry) -> Self {
        LedgerRow {
            step: e.step,
            time: e.time,
            dt: e.dt,
            energy_before: e.energy_before,
            energy_convected: e.energy_convected,
            energy_after: e.energy_after,
            dissipation: e.dissipation,
            modular: e.modular,
            excess: e.excess,
            iterations: e.iterations,
            residual: e.residual,
            extrapolated: e.extrapolated,
        }
    }
}

pub const CONVERGENCE_HEADER: &[&str] = &[
    "study",
    "dt",
    "eps",
    "l2_error",
    "error_t1",
    "error_t2",
    "error_t3",
    "completed",
    "energy_inequality",
    "max_excess",
    "apriori_ratio",
    "apriori_ok",
    "halvings",
];

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCsvRow {
    pub study: String,
    pub dt: f64,
    pub eps: f64,
    pub l2_error: f64,
    pub error_t1: f64,
    pub error_t2: f64,
    pub error_t3: f64,
    pub completed: bool,
    pub energy_inequality: bool,
    pub max_excess: f64,
    pub apriori_ratio: f64,
    pub apriori_ok: bool,
    pub halvings: usize,
}

impl ConvergenceCsvRow {
    pub fn new(study: &str, dt: f64, r: &ConvergenceRow) -> Self {
        ConvergenceCsvRow {
            study: study.to_string(),
            dt,
            eps: r.eps,
            l2_error: r.l2_error,
            error_t1: r.snapshot_errors[0],
            error_t2: r.snapshot_errors[1],
            error_t3: r.snapshot_errors[2],
            completed: r.completed,
            energy_inequality: r.energy_inequality,
            max_excess: r.max_excess,
            apriori_ratio: r.apriori_ratio,
            apriori_ok: r.apriori_ok,
            halvings: r.halvings,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecayPoint {
    pub time: f64,
    pub kinetic_energy: f64,
}

/// Whitespace-separated `x y` columns with a `#` header line.
pub fn write_columns(path: &Path, points: &[DecayPoint]) -> Result<()> {
    let mut s = String::from("# time kinetic_energy\n");
    for p in points {
        s.push_str(&format!("{:e} {:e}\n", p.time, p.kinetic_energy));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<std::path::PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            if p.file_name().is_some_and(|n| n == "stages") {
                continue;
            }
            collect_files(root, &p, out)?;
        } else {
            let name = relative(root, &p);
            if name != "manifest.json" && name != "runs.jsonl" {
                out.push(p);
            }
        }
    }
    Ok(())
}

/// Writes `reports/gates.csv` and `reports/stages.csv`, then digests every
/// output file under `out`. The tables carry neither timing nor resume
/// status (both live in the manifest), so they reproduce byte for byte.
pub fn emit_reports(manifest: &RunManifest, out: &Path) -> Result<Vec<FileDigest>> {
    let dir = out.join("reports");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let gates: Vec<_> = manifest
        .gates
        .iter()
        .map(|g| (g.stage.name(), g.gate.as_str(), g.passed, g.detail.as_str()))
        .collect();
    write_csv(&dir.join("gates.csv"), &["stage", "gate", "passed", "detail"], &gates)?;
    let stages: Vec<_> = manifest
        .stages
        .iter()
        .map(|s| (s.stage.name(), s.seed, s.outputs.len()))
        .collect();
    write_csv(&dir.join("stages.csv"), &["stage", "seed", "outputs"], &stages)?;
    let mut files = Vec::new();
    collect_files(out, out, &mut files)?;
    files
        .iter()
        .map(|p| {
            let bytes = fs::metadata(p).map_err(|e| Error::io(p, e))?.len();
            Ok(FileDigest {
                path: relative(out, p),
                sha256: sha256_file(p)?,
                bytes,
            })
        })
        .collect()
}

/// Recomputes digests and returns the paths whose content no longer
/// matches the manifest.
pub fn verify_digests(manifest: &RunManifest, out: &Path) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let p = out.join(&f.path);
        if !p.exists() || sha256_file(&p)? != f.sha256 {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}
