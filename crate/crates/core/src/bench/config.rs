use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::effective::XiGrid;
use crate::flow::InitialCondition;
use crate::io::sha256_bytes;
use crate::media::MediumSpec;
use crate::varexp::{exponent_gate, GrowthConstants};
use crate::{Error, Result};

/// Declared exponent range of the stress law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub alpha: f64,
    pub beta: f64,
}

/// Representative volume: torus side `L`, grid cells `n`, realizations `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RveSpec {
    pub side: f64,
    pub cells: usize,
    pub realizations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    /// Relative stationarity tolerance of cell solves.
    pub tol: f64,
    /// Relative stationarity tolerance of the macro viscous substeps.
    pub macro_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol: 1e-8,
            macro_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSpec {
    pub delta2_directions: usize,
    pub delta2_radius: f64,
    pub lambdas: Vec<f64>,
    pub monotonicity_pairs: usize,
    pub monotonicity_radii: [f64; 2],
    pub continuity_terms: usize,
    pub continuity_radius: f64,
    /// Torus sides of the ensembles in the deterministic-limit check; empty
    /// skips it.
    pub limit_sides: Vec<f64>,
    pub limit_cells_per_unit: usize,
    pub limit_realizations: usize,
    pub limit_radius: f64,
    /// Torus side of the Birkhoff check ensemble; unset skips it.
    pub birkhoff_side: Option<f64>,
    pub birkhoff_cells_per_unit: usize,
    pub birkhoff_realizations: usize,
    pub birkhoff_windows: Vec<f64>,
    /// The modular is taken of the constant function with this value.
    pub birkhoff_level: f64,
}

impl Default for GateSpec {
    fn default() -> Self {
        GateSpec {
            delta2_directions: 5,
            delta2_radius: 1.0,
            lambdas: vec![0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0],
            monotonicity_pairs: 50,
            monotonicity_radii: [0.25, 4.0],
            continuity_terms: 30,
            continuity_radius: 1.0,
            limit_sides: Vec::new(),
            limit_cells_per_unit: 4,
            limit_realizations: 16,
            limit_radius: 1.0,
            birkhoff_side: None,
            birkhoff_cells_per_unit: 4,
            birkhoff_realizations: 16,
            birkhoff_windows: vec![4.0, 8.0, 16.0, 32.0],
            birkhoff_level: 1.5,
        }
    }
}

/// Macroscale study on `[0,1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSpec {
    pub cells: usize,
    pub horizon: f64,
    pub dt: f64,
    pub eps: Vec<f64>,
    pub convection: bool,
    pub initial_condition: InitialCondition,
    /// Also run the whole study at `Δt/2`.
    pub dt_refined: bool,
    pub time_refinement: bool,
    /// Report an ungated convective study next to the Stokes one.
    pub report_convective: bool,
    pub snapshots: bool,
}

impl Default for MacroSpec {
    fn default() -> Self {
        MacroSpec {
            cells: 64,
            horizon: 0.05,
            dt: 0.0025,
            eps: vec![0.25, 0.125, 0.0625],
            convection: false,
            initial_condition: InitialCondition::Bump { amplitude: 0.1 },
            dt_refined: false,
            time_refinement: true,
            report_convective: false,
            snapshots: true,
        }
    }
}

/// One experiment: medium, law, RVE, ξ-grid, tolerances, gates and macro
/// study, plus the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Not part of the hash: moving outputs never changes numerics.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub medium: MediumSpec,
    pub law: LawSpec,
    pub rve: RveSpec,
    #[serde(default)]
    pub xi_grid: XiGrid,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub gates: GateSpec,
    #[serde(default, rename = "macro")]
    pub macro_study: Option<MacroSpec>,
}

fn default_dimension() -> usize {
    2
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form without `output_dir`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        // serde_json maps are ordered by key, so this is canonical.
        sha256_bytes(v.to_string().as_bytes())
    }

    pub fn growth_constants(&self) -> Result<GrowthConstants> {
        exponent_gate(self.law.alpha, self.law.beta, self.dimension)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        validate_config(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive")))
    }
}

/// Parses TOML config text and checks admissibility: the exponent gate,
/// agreement of the medium with the declared exponent range, and positive
/// counts and sizes.
pub fn validate_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.growth_constants()?;
    if cfg.dimension != 2 {
        return Err(Error::Config(format!(
            "exponents are admissible in d = {}, but the solvers are two-dimensional",
            cfg.dimension
        )));
    }
    let b = cfg.medium.bounds()?;
    if b.alpha < cfg.law.alpha || b.beta > cfg.law.beta {
        return Err(Error::Config(format!(
            "medium exponents [{}, {}] leave the declared range [{}, {}]",
            b.alpha, b.beta, cfg.law.alpha, cfg.law.beta
        )));
    }
    positive("rve.side", cfg.rve.side)?;
    nonzero("rve.cells", cfg.rve.cells)?;
    nonzero("rve.realizations", cfg.rve.realizations)?;
    cfg.xi_grid.validate()?;
    positive("solver.tol", cfg.solver.tol)?;
    positive("solver.macro_tol", cfg.solver.macro_tol)?;
    let g = &cfg.gates;
    nonzero("gates.delta2_directions", g.delta2_directions)?;
    positive("gates.delta2_radius", g.delta2_radius)?;
    for &l in &g.lambdas {
        positive("gates.lambdas", l)?;
    }
    positive("gates.monotonicity_radii[0]", g.monotonicity_radii[0])?;
    if g.monotonicity_radii[1] < g.monotonicity_radii[0] {
        return Err(Error::Config("gates.monotonicity_radii must be increasing".into()));
    }
    positive("gates.continuity_radius", g.continuity_radius)?;
    for &s in &g.limit_sides {
        positive("gates.limit_sides", s)?;
    }
    if !g.limit_sides.is_empty() {
        nonzero("gates.limit_cells_per_unit", g.limit_cells_per_unit)?;
        nonzero("gates.limit_realizations", g.limit_realizations)?;
    }
    if let Some(side) = g.birkhoff_side {
        positive("gates.birkhoff_side", side)?;
        nonzero("gates.birkhoff_cells_per_unit", g.birkhoff_cells_per_unit)?;
        if g.birkhoff_realizations < 2 {
            return Err(Error::Config("gates.birkhoff_realizations must be at least 2".into()));
        }
        if g.birkhoff_windows.iter().any(|&w| !(w > 0.0 && w <= side)) {
            return Err(Error::Config(format!("gates.birkhoff_windows must lie in (0, {side}]")));
        }
    }
    if let Some(m) = &cfg.macro_study {
        nonzero("macro.cells", m.cells)?;
        if m.cells < 4 {
            return Err(Error::Config("macro.cells must be at least 4".into()));
        }
        positive("macro.horizon", m.horizon)?;
        positive("macro.dt", m.dt)?;
        if m.eps.is_empty() {
            return Err(Error::Config("macro.eps must not be empty".into()));
        }
        for &e in &m.eps {
            positive("macro.eps", e)?;
            let k = 1.0 / e;
            if (k - k.round()).abs() > 1e-9 {
                return Err(Error::Config(format!("macro.eps = {e} is not 1/k for an integer k")));
            }
        }
    }
    Ok(cfg)
}
