use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::{
    emit_reports, CellSummaryRow, DecayPoint, FRow, GrowthRow, LedgerRow, MemberRow, CELL_SUMMARY_HEADER,
    CONVERGENCE_HEADER, F_HEADER, GROWTH_HEADER, LEDGER_HEADER, MEMBER_HEADER,
};
use crate::effective::{
    estimate_effective_table, estimate_f, estimate_rows, f_minimality_probe, flux_weak_continuity_probe,
    geometric_sequence, random_trace_free_pairs, trace_free_directions, verify_coercivity_growth, verify_delta2,
    verify_deterministic_limit, verify_monotonicity, verify_oddness, young_inequality_check, Ensemble, EnsembleSpec,
    LawKind, PotentialTable, SolveRecord, ESTIMATE_HEADER,
};
use crate::flow::{
    convective_integrability, convergence_runs, solve_fine, solve_homogenized, time_refinement_study,
    weak_continuity_at_zero, write_snapshots, EffectiveLawTable, MacroDomain, MacroTrajectory, StepOptions,
};
use crate::io::{write_csv, write_json, write_jsonl};
use crate::media::{birkhoff_identity_check, MediumFile, TorusGrid};
use crate::rng::derive_seed;
use crate::varexp::{growth_samples, verify_growth, StressLaw, SymTensor};
use crate::{Error, Result};

/// Doublings of the largest ξ-grid radius added to the `f` table.
pub const F_OUTER_RADII: usize = 2;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Media,
    Growth,
    Cell,
    Effective,
    Gates,
    /// Individual macro trajectories with ledgers and snapshots.
    Macro,
    /// The ε-convergence study with its diagnostics.
    Converge,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Media,
        Stage::Growth,
        Stage::Cell,
        Stage::Effective,
        Stage::Gates,
        Stage::Macro,
        Stage::Converge,
    ];

    /// The full pipeline; `Converge` already persists every trajectory.
    pub const PIPELINE: [Stage; 6] = [
        Stage::Media,
        Stage::Growth,
        Stage::Cell,
        Stage::Effective,
        Stage::Gates,
        Stage::Converge,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Media => "media",
            Stage::Growth => "growth",
            Stage::Cell => "cell",
            Stage::Effective => "effective",
            Stage::Gates => "gates",
            Stage::Macro => "macro",
            Stage::Converge => "converge",
        }
    }

    fn index(&self) -> u64 {
        Stage::ALL.iter().position(|s| s == self).expect("listed") as u64
    }

    /// Stages whose outputs this one reads.
    pub fn requires(&self) -> &'static [Stage] {
        match self {
            Stage::Media => &[],
            Stage::Growth => &[Stage::Media],
            Stage::Cell => &[Stage::Media],
            Stage::Effective => &[Stage::Cell],
            Stage::Gates => &[Stage::Effective],
            Stage::Macro | Stage::Converge => &[Stage::Effective],
        }
    }

    /// `targets` plus everything they depend on, in execution order.
    pub fn closure(targets: &[Stage]) -> Vec<Stage> {
        let mut need: Vec<Stage> = Vec::new();
        let mut stack: Vec<Stage> = targets.to_vec();
        while let Some(s) = stack.pop() {
            if !need.contains(&s) {
                need.push(s);
                stack.extend_from_slice(s.requires());
            }
        }
        need.sort();
        need
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Resumed,
    Failed { reason: String },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub seed: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub stage: Stage,
    pub gate: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one pipeline invocation. Stages and gates are appended in
/// execution order and never rewritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub toolkit_version: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub gates: Vec<GateOutcome>,
    pub files: Vec<FileDigest>,
    /// Modelling restrictions that apply to the whole run.
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        RunManifest {
            name: cfg.name.clone(),
            config_hash: cfg.hash(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            stages: Vec::new(),
            gates: Vec::new(),
            files: Vec::new(),
            notes: cfg
                .macro_study
                .iter()
                .map(|m| {
                    format!(
                        "macro initial condition '{}': smooth stream function supported in the box, \
                         so u0 is divergence-free with zero trace; no body force",
                        m.initial_condition.tag()
                    )
                })
                .collect(),
        }
    }

    pub fn gate(&self, name: &str) -> Option<&GateOutcome> {
        self.gates.iter().find(|g| g.gate == name)
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    pub fn all_gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    /// True when every stage ran or was resumed.
    pub fn complete(&self) -> bool {
        self.stages
            .iter()
            .all(|s| matches!(s.status, StageStatus::Completed | StageStatus::Resumed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub resume: bool,
    pub stages: Vec<Stage>,
}

impl RunOptions {
    pub fn pipeline(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            out: out.into(),
            resume: false,
            stages: Stage::PIPELINE.to_vec(),
        }
    }
}

/// Completion marker of a stage, keyed by config hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct StageMarker {
    config_hash: String,
    outputs: Vec<String>,
    gates: Vec<GateOutcome>,
}

/// Creates `out` and proves it writable before any work starts.
pub fn prepare_output(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let probe = out.join(".write-probe");
    fs::write(&probe, b"ok").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    hash: String,
    ensemble: Option<Ensemble>,
    aeff: Option<EffectiveLawTable>,
    f_table: Option<PotentialTable>,
}

type StageOutput = (Vec<PathBuf>, Vec<GateOutcome>);

#[derive(Serialize, Deserialize)]
struct CellLine {
    law: LawKind,
    xi: SymTensor,
    tol: f64,
    #[serde(flatten)]
    record: SolveRecord,
}

impl Context<'_> {
    fn seed(&self, stage: Stage) -> u64 {
        derive_seed(self.cfg.seed, &[stage.index()])
    }

    fn dir(&self, stage: Stage) -> Result<PathBuf> {
        let d = self.out.join(stage.name());
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        Ok(d)
    }

    fn ensemble(&mut self) -> Result<&Ensemble> {
        if self.ensemble.is_none() {
            let spec = EnsembleSpec {
                medium: self.cfg.medium.clone(),
                side: self.cfg.rve.side,
                cells: self.cfg.rve.cells,
                realizations: self.cfg.rve.realizations,
                seed: self.seed(Stage::Media),
            };
            let ens = Ensemble::generate(spec)?;
            // Reuse persisted solves from an earlier run of the cell stage.
            let path = self.out.join("cell").join("solves.jsonl");
            if self.marker_ok(Stage::Cell) && path.exists() {
                prime_from(&ens, &path)?;
            }
            self.ensemble = Some(ens);
        }
        Ok(self.ensemble.as_ref().expect("set above"))
    }

    fn marker_path(&self, stage: Stage) -> PathBuf {
        self.out.join("stages").join(format!("{}.done", stage.name()))
    }

    fn read_marker(&self, stage: Stage) -> Option<StageMarker> {
        let text = fs::read_to_string(self.marker_path(stage)).ok()?;
        let m: StageMarker = serde_json::from_str(&text).ok()?;
        (m.config_hash == self.hash).then_some(m)
    }

    fn marker_ok(&self, stage: Stage) -> bool {
        self.read_marker(stage).is_some()
    }

    fn tables(&mut self) -> Result<(&EffectiveLawTable, &PotentialTable)> {
        if self.aeff.is_none() || self.f_table.is_none() {
            let dir = self.out.join("effective");
            let load = |name: &str| -> Result<PotentialTable> {
                let p = dir.join(name);
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                Ok(serde_json::from_str(&text)?)
            };
            let aeff = load("aeff_table.json")?;
            self.f_table = Some(load("f_table.json")?);
            self.aeff = Some(EffectiveLawTable::load(
                aeff,
                "effective/aeff_table.json",
                self.seed(Stage::Effective),
            )?);
        }
        Ok((self.aeff.as_ref().expect("set"), self.f_table.as_ref().expect("set")))
    }

    fn gate(stage: Stage, gate: &str, passed: bool, detail: String) -> GateOutcome {
        GateOutcome {
            stage,
            gate: gate.to_string(),
            passed,
            detail,
        }
    }

    fn run_media(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Media)?;
        let seed = self.seed(Stage::Media);
        let cfg = self.cfg;
        let ens = self.ensemble()?;
        let mut files = Vec::new();
        let mut rows = Vec::with_capacity(ens.len());
        for (r, m) in ens.members.iter().enumerate() {
            let (a_min, a_max) = m.coefficient_range();
            let (p_min, p_max) = m.exponent_range();
            rows.push(MemberRow {
                index: r,
                seed: m.seed,
                cells: m.grid.cells,
                side: m.grid.side,
                a_min,
                a_max,
                p_min,
                p_max,
                p_mean: m.p.iter().sum::<f64>() / m.len() as f64,
            });
            let p = dir.join(format!("member_{r:04}.json"));
            MediumFile {
                spec: cfg.medium.clone(),
                realization: m.clone(),
            }
            .write(&p)?;
            files.push(p);
        }
        let p = dir.join("members.csv");
        write_csv(&p, MEMBER_HEADER, &rows)?;
        files.push(p);
        let mut gates = Vec::new();
        if let Some(side) = cfg.gates.birkhoff_side {
            let g = &cfg.gates;
            let grid = TorusGrid::new(side, (side * g.birkhoff_cells_per_unit as f64).round() as usize)?;
            let members = (0..g.birkhoff_realizations)
                .map(|r| cfg.medium.generate(grid, derive_seed(seed, &[1000, r as u64])))
                .collect::<Result<Vec<_>>>()?;
            let level = g.birkhoff_level;
            let rep = birkhoff_identity_check(&members, |_, _| level, &g.birkhoff_windows)?;
            let agree = rep.agreement_in_se();
            let nonincreasing = rep.discrepancy_nonincreasing(0.0);
            let p = dir.join("birkhoff.json");
            write_json(&p, &rep)?;
            files.push(p);
            gates.push(Self::gate(
                Stage::Media,
                "birkhoff",
                agree <= 3.0 && nonincreasing,
                format!("largest window within {agree:.3} SE; discrepancy nonincreasing = {nonincreasing}"),
            ));
        }
        Ok((files, gates))
    }

    fn run_growth(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Growth)?;
        let samples = growth_samples(2000, self.seed(Stage::Growth));
        let mut constants = self.cfg.growth_constants()?;
        let ens = self.ensemble()?;
        let reports: Vec<_> = ens
            .members
            .iter()
            .map(|m| verify_growth(&StressLaw::power_law(m), &samples))
            .collect();
        let rows: Vec<GrowthRow> = ens
            .members
            .iter()
            .zip(&reports)
            .map(|(m, r)| GrowthRow {
                seed: m.seed,
                alpha: r.alpha,
                beta: r.beta,
                c0: r.c0,
                c1: r.c1,
                c1_closed_form: r.c1_closed_form,
                max_violation_margin: r.max_violation_margin,
                passed: r.passed,
            })
            .collect();
        constants.c0 = reports.iter().map(|r| r.c0).reduce(f64::min);
        constants.c1 = reports.iter().map(|r| r.c1).reduce(f64::max);
        let failed = reports.iter().filter(|r| !r.passed).count();
        let p1 = dir.join("growth.csv");
        write_csv(&p1, GROWTH_HEADER, &rows)?;
        let p2 = dir.join("constants.json");
        write_json(&p2, &constants)?;
        let gate = Self::gate(
            Stage::Growth,
            "growth",
            failed == 0,
            format!(
                "{} of {} realizations pass; c0 = {:?}, c1 = {:?}",
                reports.len() - failed,
                reports.len(),
                constants.c0,
                constants.c1
            ),
        );
        Ok((vec![p1, p2], vec![gate]))
    }

    fn run_cell(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Cell)?;
        let tol = self.cfg.solver.tol;
        let coefficient_nodes = self.cfg.xi_grid.nodes();
        let unit_nodes = self.cfg.xi_grid.with_outer_radii(F_OUTER_RADII).nodes();
        let ens = self.ensemble()?;
        let mut lines = Vec::new();
        let mut summary = Vec::new();
        for (law, nodes) in [(LawKind::Coefficient, &coefficient_nodes), (LawKind::Unit, &unit_nodes)] {
            for xi in nodes {
                let recs = ens.solve(law, *xi, tol)?;
                let converged = recs.iter().filter(|r| r.converged).count();
                summary.push(CellSummaryRow {
                    law: law_name(law),
                    xi_xx: xi.xx,
                    xi_xy: xi.xy,
                    xi_yy: xi.yy,
                    realizations: recs.len(),
                    converged,
                    max_residual: recs.iter().map(|r| r.residual).fold(0.0, f64::max),
                    mean_iterations: recs.iter().map(|r| r.iterations as f64).sum::<f64>() / recs.len() as f64,
                });
                lines.extend(recs.iter().map(|r| CellLine {
                    law,
                    xi: *xi,
                    tol,
                    record: *r,
                }));
            }
        }
        let p1 = dir.join("solves.jsonl");
        write_jsonl(&p1, &lines)?;
        let p2 = dir.join("summary.csv");
        write_csv(&p2, CELL_SUMMARY_HEADER, &summary)?;
        let total = lines.len();
        let ok = lines.iter().filter(|l| l.record.converged).count();
        let gate = Self::gate(
            Stage::Cell,
            "cell_convergence",
            ok == total,
            format!("{ok} of {total} corrector solves converged"),
        );
        Ok((vec![p1, p2], vec![gate]))
    }

    fn run_effective(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Effective)?;
        let tol = self.cfg.solver.tol;
        let grid = self.cfg.xi_grid.clone();
        let tag = self.cfg.medium.tag();
        let side = self.cfg.rve.side;
        let seed = self.seed(Stage::Effective);
        let ens = self.ensemble()?;
        let (aeff, estimates) = estimate_effective_table(&grid, ens, tol)?;
        let mut f_rows = Vec::with_capacity(grid.len());
        let mut f_vals = Vec::with_capacity(grid.len());
        let mut f_grads = Vec::with_capacity(grid.len());
        for xi in grid.nodes() {
            let f = estimate_f(xi, ens, tol)?;
            f_vals.push(f.f);
            f_grads.push(f.gradient);
            f_rows.push(FRow {
                medium: tag,
                side,
                xi_xx: xi.xx,
                xi_xy: xi.xy,
                xi_yy: xi.yy,
                f: f.f,
                f_std_error: f.f_std_error,
                grad_xx: f.gradient.xx,
                grad_xy: f.gradient.xy,
                grad_yy: f.gradient.yy,
                realizations: f.realizations,
                excluded: f.excluded,
            });
        }
        // Extra outer radii so conjugates at tabulated stresses stay inside.
        let f_grid = grid.with_outer_radii(F_OUTER_RADII);
        for xi in f_grid.nodes().into_iter().skip(grid.len()) {
            let f = estimate_f(xi, ens, tol)?;
            f_vals.push(f.f);
            f_grads.push(f.gradient);
        }
        let f_table = PotentialTable::new(f_grid, f_vals, f_grads)?;
        let paths = [
            dir.join("aeff.csv"),
            dir.join("aeff.jsonl"),
            dir.join("f.csv"),
            dir.join("aeff_table.json"),
            dir.join("f_table.json"),
        ];
        write_csv(&paths[0], ESTIMATE_HEADER, &estimate_rows(tag, &estimates))?;
        write_jsonl(&paths[1], &estimates)?;
        write_csv(&paths[2], F_HEADER, &f_rows)?;
        write_json(&paths[3], &aeff)?;
        write_json(&paths[4], &f_table)?;
        let loaded = EffectiveLawTable::load(aeff, "effective/aeff_table.json", seed);
        let gate = match &loaded {
            Ok(t) => Self::gate(
                Stage::Effective,
                "table_monotonicity",
                true,
                format!(
                    "{} pairs, min normalized margin {:.3e}, gradient consistency {:.3e}",
                    t.spot_check.pairs, t.spot_check.min_normalized_margin, t.gradient_consistency
                ),
            ),
            Err(e) => Self::gate(Stage::Effective, "table_monotonicity", false, e.to_string()),
        };
        self.aeff = loaded.ok();
        self.f_table = Some(f_table);
        Ok((paths.to_vec(), vec![gate]))
    }

    fn run_gates(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Gates)?;
        let cfg = self.cfg;
        let g = &cfg.gates;
        let tol = cfg.solver.tol;
        let seed = self.seed(Stage::Gates);
        let f_table = self.tables()?.1.clone();
        let ens = self.ensemble()?;
        let mut files = Vec::new();
        let mut gates = Vec::new();
        let mut save = |name: &str, value: &dyn erased::Json| -> Result<()> {
            let p = dir.join(format!("{name}.json"));
            value.write(&p)?;
            files.push(p);
            Ok(())
        };

        let xis = trace_free_directions(g.delta2_directions, g.delta2_radius);
        let d2 = verify_delta2(&xis, &g.lambdas, ens, cfg.law.alpha, cfg.law.beta, tol)?;
        save("delta2", &d2)?;
        gates.push(Self::gate(
            Stage::Gates,
            "delta2",
            d2.passed,
            format!("{} violations in {} rows", d2.violations, d2.rows.len()),
        ));

        let cg = verify_coercivity_growth(&cfg.xi_grid.nodes(), ens, &f_table, tol)?;
        save("coercivity_growth", &cg)?;
        gates.push(Self::gate(
            Stage::Gates,
            "coercivity_growth",
            cg.passed,
            format!("c0 = {:.6e}, c1 = {:.6e}", cg.c0, cg.c1),
        ));

        let pairs = random_trace_free_pairs(
            g.monotonicity_pairs,
            g.monotonicity_radii[0],
            g.monotonicity_radii[1],
            seed,
        );
        let mono = verify_monotonicity(&pairs, ens, tol)?;
        save("monotonicity", &mono)?;
        gates.push(Self::gate(
            Stage::Gates,
            "monotonicity",
            mono.passed,
            format!(
                "min inner {:.6e}, min margin {:.3} SE",
                mono.min_inner, mono.min_margin_in_se
            ),
        ));

        let odd = verify_oddness(&xis, ens, tol)?;
        save("oddness", &odd)?;
        gates.push(Self::gate(
            Stage::Gates,
            "oddness",
            odd.passed,
            format!("zero flux {:.3e}, odd defect {:.3e}", odd.zero_flux, odd.max_odd_defect),
        ));

        let xi = SymTensor::from_polar(g.continuity_radius, 0.3);
        let cont = flux_weak_continuity_probe(xi, &geometric_sequence(xi, g.continuity_terms), ens, tol)?;
        save("flux_continuity", &cont)?;
        gates.push(Self::gate(
            Stage::Gates,
            "flux_continuity",
            cont.passed,
            format!("final distance {:.3e}", cont.distances.last().copied().unwrap_or(0.0)),
        ));

        let min = f_minimality_probe(xi, ens, 8, seed, tol)?;
        save("f_minimality", &min)?;
        gates.push(Self::gate(
            Stage::Gates,
            "f_minimality",
            min.passed,
            format!("min relative gap {:.3e}", min.min_relative_gap),
        ));

        let etas: Vec<SymTensor> = cg.rows.iter().map(|r| r.flux).collect();
        let young = young_inequality_check(&f_table, &etas, tol);
        save("young", &young)?;
        gates.push(Self::gate(
            Stage::Gates,
            "young",
            young.passed,
            format!("{} pairs, max excess {:.3e}", young.pairs, young.max_excess),
        ));

        if !g.limit_sides.is_empty() {
            let ensembles = g
                .limit_sides
                .iter()
                .enumerate()
                .map(|(k, &side)| {
                    Ensemble::generate(EnsembleSpec {
                        medium: cfg.medium.clone(),
                        side,
                        cells: (side * g.limit_cells_per_unit as f64).round() as usize,
                        realizations: g.limit_realizations,
                        seed: derive_seed(seed, &[2000, k as u64]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Ensemble> = ensembles.iter().collect();
            let lim = verify_deterministic_limit(SymTensor::from_polar(g.limit_radius, 0.3), &refs, tol)?;
            save("deterministic_limit", &lim)?;
            gates.push(Self::gate(
                Stage::Gates,
                "deterministic_limit",
                lim.passed,
                format!("{} sides", lim.rows.len()),
            ));
        }
        let p = dir.join("summary.csv");
        write_csv(
            &p,
            &["gate", "passed", "detail"],
            &gates.iter().map(|g| (&g.gate, g.passed, &g.detail)).collect::<Vec<_>>(),
        )?;
        files.push(p);
        Ok((files, gates))
    }

    fn macro_setup(&mut self) -> Result<(super::config::MacroSpec, MacroDomain, StepOptions)> {
        let m = self
            .cfg
            .macro_study
            .clone()
            .ok_or_else(|| Error::Config("no [macro] section in the config".into()))?;
        let domain = MacroDomain::new(m.cells, m.horizon, m.dt, m.convection)?;
        let opts = StepOptions {
            tol: self.cfg.solver.macro_tol,
            ..StepOptions::default()
        };
        Ok((m, domain, opts))
    }

    fn persist(&self, dir: &Path, tag: &str, traj: &MacroTrajectory, snapshots: bool) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        let rows: Vec<LedgerRow> = traj.ledger.iter().map(LedgerRow::from).collect();
        let p = dir.join(format!("ledger_{tag}.csv"));
        write_csv(&p, LEDGER_HEADER, &rows)?;
        files.push(p);
        let decay: Vec<DecayPoint> = traj
            .states
            .iter()
            .map(|s| DecayPoint {
                time: s.time,
                kinetic_energy: s.kinetic_energy,
            })
            .collect();
        let p = dir.join(format!("decay_{tag}.dat"));
        super::report::write_columns(&p, &decay)?;
        files.push(p);
        if snapshots {
            let (b, j) = write_snapshots(traj, &dir.join("snapshots"), tag)?;
            files.push(b);
            files.push(j);
        }
        Ok(files)
    }

    fn run_macro(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Macro)?;
        let (m, domain, opts) = self.macro_setup()?;
        let medium = self.ensemble()?.members[0].clone();
        let table = self.tables()?.0.clone();
        let mut files = Vec::new();
        let mut all_ok = true;
        let mut detail = Vec::new();
        let hom = solve_homogenized(&table, m.initial_condition, &domain, &opts)?;
        files.extend(self.persist(&dir, "homogenized", &hom, m.snapshots)?);
        all_ok &= hom.completed && hom.energy_inequality_holds();
        detail.push(format!("homogenized max excess {:.3e}", hom.max_excess()));
        for &e in &m.eps {
            let t = solve_fine(&medium, e, m.initial_condition, &domain, &opts)?;
            files.extend(self.persist(&dir, &eps_tag(e), &t, m.snapshots)?);
            all_ok &= t.completed && t.energy_inequality_holds();
            detail.push(format!("eps {e} max excess {:.3e}", t.max_excess()));
        }
        Ok((
            files,
            vec![Self::gate(Stage::Macro, "energy_inequality", all_ok, detail.join("; "))],
        ))
    }

    fn run_converge(&mut self) -> Result<StageOutput> {
        let dir = self.dir(Stage::Converge)?;
        let (m, domain, opts) = self.macro_setup()?;
        let medium = self.ensemble()?.members[0].clone();
        let table = self.tables()?.0.clone();
        let alpha = self.cfg.law.alpha;
        let mut files = Vec::new();
        let mut gates = Vec::new();
        let mut rows = Vec::new();

        let mut studies = vec![(domain, "dt")];
        if m.dt_refined {
            studies.push((
                MacroDomain::new(m.cells, m.horizon, m.dt / 2.0, m.convection)?,
                "dt_half",
            ));
        }
        let mut energy_ok = true;
        let mut apriori_ok = true;
        let mut decreasing = true;
        let mut strict = true;
        let mut integrable = true;
        for (d, label) in &studies {
            let runs = convergence_runs(&medium, &table, &m.eps, m.initial_condition, d, &opts)?;
            files.extend(self.persist(&dir, &format!("homogenized_{label}"), &runs.homogenized, m.snapshots)?);
            for (e, t) in m.eps.iter().zip(&runs.fine) {
                files.extend(self.persist(&dir, &format!("{}_{label}", eps_tag(*e)), t, m.snapshots)?);
                integrable &= convective_integrability(t, alpha)?.finite;
            }
            let s = &runs.study;
            energy_ok &= s.homogenized_completed
                && s.homogenized_energy_inequality
                && s.rows.iter().all(|r| r.completed && r.energy_inequality);
            apriori_ok &= s.rows.iter().all(|r| r.apriori_ok);
            decreasing &= s.decreasing_beyond_noise();
            strict &= s.strictly_decreasing();
            rows.extend(
                s.rows
                    .iter()
                    .map(|r| super::report::ConvergenceCsvRow::new(label, d.dt, r)),
            );
            let p = dir.join(format!("study_{label}.json"));
            write_json(&p, s)?;
            files.push(p);
            if *label == "dt" {
                let wc = weak_continuity_at_zero(&runs.homogenized, 5, 4)?;
                let p = dir.join("weak_continuity.json");
                write_json(&p, &wc)?;
                files.push(p);
                gates.push(Self::gate(
                    Stage::Converge,
                    "weak_continuity",
                    wc.passed,
                    format!("defect slope {:.3}", wc.slope),
                ));
            }
        }
        let p = dir.join("errors.csv");
        write_csv(&p, CONVERGENCE_HEADER, &rows)?;
        files.push(p);
        gates.push(Self::gate(
            Stage::Converge,
            "energy_inequality",
            energy_ok,
            "per-step ledger slack 1e-8 on every run".into(),
        ));
        gates.push(Self::gate(
            Stage::Converge,
            "apriori",
            apriori_ok,
            "frozen constant fitted on the coarsest eps".into(),
        ));
        gates.push(Self::gate(
            Stage::Converge,
            "convective_integrability",
            integrable,
            format!("alpha = {alpha}"),
        ));
        let stokes = !m.convection;
        gates.push(Self::gate(
            Stage::Converge,
            "eps_convergence",
            decreasing || !stokes,
            if stokes {
                format!("nonincreasing beyond noise = {decreasing}, strictly decreasing = {strict}")
            } else {
                format!("convective mode, reported only: strictly decreasing = {strict}")
            },
        ));
        if m.report_convective && stokes {
            let d = MacroDomain::new(m.cells, m.horizon, m.dt, true)?;
            let runs = convergence_runs(&medium, &table, &m.eps, m.initial_condition, &d, &opts)?;
            let p = dir.join("study_convective.json");
            write_json(&p, &runs.study)?;
            files.push(p);
        }
        if m.time_refinement {
            let coarsest = m.eps.iter().copied().fold(0.0, f64::max);
            let tr = time_refinement_study(&domain, |d| {
                solve_fine(&medium, coarsest, m.initial_condition, d, &opts)
            })?;
            let p = dir.join("time_refinement.json");
            write_json(&p, &tr)?;
            files.push(p);
            gates.push(Self::gate(
                Stage::Converge,
                "time_refinement",
                tr.passed,
                format!(
                    "changes {:.3e}, {:.3e}; order {:.3}",
                    tr.changes[0], tr.changes[1], tr.observed_order
                ),
            ));
        }
        Ok((files, gates))
    }
}

mod erased {
    use std::path::Path;

    /// Object-safe JSON writer so reports of different types share one helper.
    pub trait Json {
        fn write(&self, path: &Path) -> crate::Result<()>;
    }

    impl<T: serde::Serialize> Json for T {
        fn write(&self, path: &Path) -> crate::Result<()> {
            crate::io::write_json(path, self)
        }
    }
}

fn law_name(law: LawKind) -> &'static str {
    match law {
        LawKind::Coefficient => "coefficient",
        LawKind::Unit => "unit",
    }
}

fn eps_tag(e: f64) -> String {
    format!("eps_1_{}", (1.0 / e).round() as u64)
}

fn prime_from(ens: &Ensemble, path: &Path) -> Result<()> {
    use std::collections::BTreeMap;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut groups: BTreeMap<(u8, [u64; 3], u64), (LawKind, SymTensor, f64, Vec<SolveRecord>)> = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let l: CellLine = serde_json::from_str(line)?;
        let key = (
            l.law as u8,
            [l.xi.xx.to_bits(), l.xi.xy.to_bits(), l.xi.yy.to_bits()],
            l.tol.to_bits(),
        );
        groups
            .entry(key)
            .or_insert_with(|| (l.law, l.xi, l.tol, Vec::new()))
            .3
            .push(l.record);
    }
    for (_, (law, xi, tol, recs)) in groups {
        ens.prime(law, xi, tol, recs)?;
    }
    Ok(())
}

/// Runs the requested stages (plus their dependencies) in order, persisting
/// each stage's outputs before the next starts. With `resume`, stages whose
/// completion marker matches the config hash are not rerun.
pub fn run_pipeline(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    prepare_output(&opts.out)?;
    let stages_dir = opts.out.join("stages");
    fs::create_dir_all(&stages_dir).map_err(|e| Error::io(&stages_dir, e))?;
    let mut ctx = Context {
        cfg,
        out: opts.out.clone(),
        hash: cfg.hash(),
        ensemble: None,
        aeff: None,
        f_table: None,
    };
    let mut manifest = RunManifest::new(cfg);
    let mut failed: Vec<Stage> = Vec::new();
    for stage in Stage::closure(&opts.stages) {
        let seed = ctx.seed(stage);
        let blocked: Vec<&str> = stage
            .requires()
            .iter()
            .filter(|d| failed.contains(d))
            .map(|d| d.name())
            .collect();
        if !blocked.is_empty() {
            failed.push(stage);
            manifest.stages.push(StageRecord {
                stage,
                status: StageStatus::Skipped {
                    reason: format!("upstream stage failed: {}", blocked.join(", ")),
                },
                seed,
                wall_clock_s: 0.0,
                outputs: Vec::new(),
            });
            continue;
        }
        if opts.resume {
            if let Some(m) = ctx.read_marker(stage) {
                log::info!("stage {} resumed from marker", stage.name());
                manifest.gates.extend(m.gates);
                manifest.stages.push(StageRecord {
                    stage,
                    status: StageStatus::Resumed,
                    seed,
                    wall_clock_s: 0.0,
                    outputs: m.outputs,
                });
                continue;
            }
        }
        let incomplete = stages_dir.join(format!("{}.incomplete", stage.name()));
        fs::write(&incomplete, &ctx.hash).map_err(|e| Error::io(&incomplete, e))?;
        let _ = fs::remove_file(ctx.marker_path(stage));
        log::info!("stage {} started", stage.name());
        let t = Instant::now();
        let result = match stage {
            Stage::Media => ctx.run_media(),
            Stage::Growth => ctx.run_growth(),
            Stage::Cell => ctx.run_cell(),
            Stage::Effective => ctx.run_effective(),
            Stage::Gates => ctx.run_gates(),
            Stage::Macro => ctx.run_macro(),
            Stage::Converge => ctx.run_converge(),
        };
        let wall = t.elapsed().as_secs_f64();
        match result {
            Ok((files, gates)) => {
                let outputs: Vec<String> = files.iter().map(|p| relative(&opts.out, p)).collect();
                let marker = StageMarker {
                    config_hash: ctx.hash.clone(),
                    outputs: outputs.clone(),
                    gates: gates.clone(),
                };
                write_json(&ctx.marker_path(stage), &marker)?;
                let _ = fs::remove_file(&incomplete);
                manifest.gates.extend(gates);
                manifest.stages.push(StageRecord {
                    stage,
                    status: StageStatus::Completed,
                    seed,
                    wall_clock_s: wall,
                    outputs,
                });
            }
            Err(e) => {
                log::warn!("stage {} failed: {e}", stage.name());
                failed.push(stage);
                manifest.stages.push(StageRecord {
                    stage,
                    status: StageStatus::Failed { reason: e.to_string() },
                    seed,
                    wall_clock_s: wall,
                    outputs: Vec::new(),
                });
            }
        }
        write_json(&opts.out.join("manifest.json"), &manifest)?;
    }
    manifest.files = emit_reports(&manifest, &opts.out)?;
    write_json(&opts.out.join("manifest.json"), &manifest)?;
    append_history(&opts.out, &manifest)?;
    Ok(manifest)
}

fn append_history(out: &Path, manifest: &RunManifest) -> Result<()> {
    use std::io::Write;
    let p = out.join("runs.jsonl");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&p)
        .map_err(|e| Error::io(&p, e))?;
    let line = serde_json::to_string(manifest)?;
    writeln!(f, "{line}").map_err(|e| Error::io(&p, e))
}

pub(crate) fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}
