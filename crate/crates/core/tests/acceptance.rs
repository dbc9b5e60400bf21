//! Acceptance suite. Runs every criterion at full scale and prints one
//! PASS/FAIL line each; exits nonzero if any fails.
//!
//! Select a subset with numeric arguments:
//! `cargo test --release --test acceptance -- 3 5`.

use std::rc::Rc;
use std::time::Instant;

use rheohom::bench::{run_pipeline, validate_config, RunOptions};
use rheohom::cell::{solve_medium, CellOptions};
use rheohom::effective::{
    estimate_effective_table, estimate_f_table, random_trace_free_pairs, trace_free_directions,
    verify_coercivity_growth, verify_delta2, verify_deterministic_limit, verify_monotonicity, Ensemble, EnsembleSpec,
    XiGrid,
};
use rheohom::flow::{convergence_runs, EffectiveLawTable, InitialCondition, MacroDomain, StepOptions};
use rheohom::media::{birkhoff_identity_check, ExponentLaw, MediumSpec, TorusGrid};
use rheohom::rng::derive_seed;
use rheohom::varexp::{power_law, SymTensor};

const TOL: f64 = 1e-8;
const SEED: u64 = 20_240_611;

struct Outcome {
    passed: bool,
    detail: String,
}

type Check = fn(&mut Shared) -> rheohom::Result<Outcome>;

/// Ensembles reused by criteria 3 to 5 and macro runs shared by 8 and 9.
#[derive(Default)]
struct Shared {
    random: Option<Vec<(&'static str, Ensemble)>>,
    flow: Option<Rc<MacroResults>>,
}

fn voronoi() -> MediumSpec {
    MediumSpec::Voronoi {
        intensity: 1.0,
        law: ExponentLaw::Uniform { lo: 1.85, hi: 3.0 },
        a_value: 1.0,
        mollify_radius: 0.0,
    }
}

fn percolation() -> MediumSpec {
    MediumSpec::Percolation {
        q: 0.7,
        alpha: 1.85,
        beta: 3.0,
    }
}

impl Shared {
    fn random(&mut self) -> rheohom::Result<&[(&'static str, Ensemble)]> {
        if self.random.is_none() {
            let make = |spec: MediumSpec, k: u64| {
                Ensemble::generate(EnsembleSpec {
                    medium: spec,
                    side: 16.0,
                    cells: 64,
                    realizations: 16,
                    seed: derive_seed(SEED, &[k]),
                })
            };
            self.random = Some(vec![
                ("voronoi", make(voronoi(), 1)?),
                ("percolation", make(percolation(), 2)?),
            ]);
        }
        Ok(self.random.as_deref().expect("set above"))
    }
}

fn c1_constant_medium(_: &mut Shared) -> rheohom::Result<Outcome> {
    let grid = XiGrid::default();
    let mut worst_v: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    for p in [2.0, 3.0] {
        let spec = EnsembleSpec {
            medium: MediumSpec::Constant { a: 1.0, p },
            side: 1.0,
            cells: 32,
            realizations: 1,
            seed: SEED,
        };
        let ens = Ensemble::generate(spec)?;
        for xi in grid.nodes() {
            let sol = solve_medium(&ens.members[0], xi, &CellOptions::default())?;
            let v = sol.fields.as_ref().expect("fields kept").v.l2_norm();
            worst_v = worst_v.max(v);
        }
        let (_, estimates) = estimate_effective_table(&grid, &ens, TOL)?;
        for e in &estimates {
            let exact = power_law(1.0, p, e.xi).1;
            worst_a = worst_a.max((e.mean - exact).norm() / exact.norm());
        }
    }
    Ok(Outcome {
        passed: worst_v <= 1e-10 && worst_a <= 1e-8,
        detail: format!("max corrector norm {worst_v:.2e}, max relative A^eff error {worst_a:.2e}"),
    })
}

fn c2_laminate_oracle(_: &mut Shared) -> rheohom::Result<Outcome> {
    let medium = MediumSpec::Laminate {
        axis: 0,
        a: vec![1.0, 3.0],
        p: vec![2.0, 2.0],
    }
    .generate(TorusGrid::new(1.0, 256)?, 0)?;
    let opts = CellOptions {
        tol: 1e-10,
        keep_fields: false,
        ..CellOptions::default()
    };
    // Shear across the layers sees the harmonic mean, the deviatoric
    // diagonal strain the arithmetic mean.
    let shear = solve_medium(&medium, SymTensor::shear(0.5), &opts)?;
    let dev = solve_medium(&medium, SymTensor::diag(1.0, -1.0), &opts)?;
    let harmonic = 2.0 / (1.0 + 1.0 / 3.0);
    let arithmetic = 2.0;
    let shear_resp = 2.0 * shear.flux.xy;
    let dev_resp = dev.flux.xx;
    let e1 = (shear_resp - harmonic).abs() / harmonic;
    let e2 = (dev_resp - arithmetic).abs() / arithmetic;
    Ok(Outcome {
        passed: e1 <= 0.01 && e2 <= 0.01 && shear.converged && dev.converged,
        detail: format!(
            "shear {shear_resp:.8} vs {harmonic} (rel {e1:.1e}), deviatoric {dev_resp:.8} vs {arithmetic} (rel {e2:.1e})"
        ),
    })
}

fn c3_delta2(s: &mut Shared) -> rheohom::Result<Outcome> {
    let xis = trace_free_directions(5, 1.0);
    let lambdas = [0.1, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut passed = true;
    let mut detail = Vec::new();
    for (name, ens) in s.random()? {
        let r = verify_delta2(&xis, &lambdas, ens, 1.85, 3.0, TOL)?;
        passed &= r.passed;
        let worst = r
            .rows
            .iter()
            .map(|row| (row.excess - row.slack) / row.f_scaled.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max);
        detail.push(format!(
            "{name}: {} violations / {} rows, worst normalized margin {worst:+.2e}",
            r.violations,
            r.rows.len()
        ));
    }
    Ok(Outcome {
        passed,
        detail: detail.join("; "),
    })
}

fn c4_coercivity_growth(s: &mut Shared) -> rheohom::Result<Outcome> {
    let grid = XiGrid::default();
    let mut passed = true;
    let mut detail = Vec::new();
    for (name, ens) in s.random()? {
        let f_table = estimate_f_table(&grid.with_outer_radii(2), ens, TOL)?;
        let r = verify_coercivity_growth(&grid.nodes(), ens, &f_table, TOL)?;
        passed &= r.passed;
        let lb = r.rows.iter().filter(|row| row.f_star_lower_bound_only).count();
        detail.push(format!(
            "{name}: c0 = {:.4}, c1 = {:.4}, truncated conjugates {lb}",
            r.c0, r.c1
        ));
    }
    Ok(Outcome {
        passed,
        detail: detail.join("; "),
    })
}

fn c5_monotonicity(s: &mut Shared) -> rheohom::Result<Outcome> {
    let pairs = random_trace_free_pairs(50, 0.25, 4.0, derive_seed(SEED, &[5]));
    let mut passed = true;
    let mut detail = Vec::new();
    for (name, ens) in s.random()? {
        let r = verify_monotonicity(&pairs, ens, TOL)?;
        passed &= r.passed;
        detail.push(format!("{name}: min margin {:.1} SE", r.min_margin_in_se));
    }
    Ok(Outcome {
        passed,
        detail: detail.join("; "),
    })
}

fn c6_deterministic_limit(_: &mut Shared) -> rheohom::Result<Outcome> {
    let ensembles = [8.0, 16.0, 32.0]
        .iter()
        .enumerate()
        .map(|(k, &side)| {
            Ensemble::generate(EnsembleSpec {
                medium: percolation(),
                side,
                cells: (4.0 * side) as usize,
                realizations: 16,
                seed: derive_seed(SEED, &[6, k as u64]),
            })
        })
        .collect::<rheohom::Result<Vec<_>>>()?;
    let refs: Vec<&Ensemble> = ensembles.iter().collect();
    let r = verify_deterministic_limit(SymTensor::from_polar(1.0, 0.3), &refs, TOL)?;
    let vars: Vec<String> = r
        .rows
        .iter()
        .map(|row| {
            format!(
                "L={}: [{:.2e} {:.2e} {:.2e}]",
                row.side, row.variance[0], row.variance[1], row.variance[2]
            )
        })
        .collect();
    Ok(Outcome {
        passed: r.passed,
        detail: vars.join(", "),
    })
}

fn c7_birkhoff(_: &mut Shared) -> rheohom::Result<Outcome> {
    let grid = TorusGrid::new(32.0, 128)?;
    let mut passed = true;
    let mut detail = Vec::new();
    for (k, (name, spec)) in [("voronoi", voronoi()), ("percolation", percolation())]
        .into_iter()
        .enumerate()
    {
        let members = (0..16)
            .map(|r| spec.generate(grid, derive_seed(SEED, &[7, k as u64, r])))
            .collect::<rheohom::Result<Vec<_>>>()?;
        let rep = birkhoff_identity_check(&members, |_, _| 1.5, &[4.0, 8.0, 16.0, 32.0])?;
        let agree = rep.agreement_in_se();
        let mono = rep.discrepancy_nonincreasing(2.0);
        passed &= agree <= 3.0 && mono;
        let d: Vec<String> = rep
            .windows
            .iter()
            .map(|w| format!("{:.3e}±{:.1e}", w.discrepancy, w.discrepancy_se))
            .collect();
        detail.push(format!("{name}: {agree:.2} SE, discrepancies [{}]", d.join(" ")));
    }
    Ok(Outcome {
        passed,
        detail: detail.join("; "),
    })
}

struct MacroResults {
    energy_ok: bool,
    apriori_ok: bool,
    decreasing: Vec<bool>,
    detail: Vec<String>,
}

fn laminate_macro() -> rheohom::Result<MacroResults> {
    let ens = Ensemble::generate(EnsembleSpec {
        medium: MediumSpec::Laminate {
            axis: 0,
            a: vec![1.0, 3.0],
            p: vec![2.0, 2.0],
        },
        side: 1.0,
        cells: 64,
        realizations: 1,
        seed: SEED,
    })?;
    let (table, _) = estimate_effective_table(&XiGrid::default(), &ens, 1e-10)?;
    let table = EffectiveLawTable::load(table, "laminate cell table", SEED)?;
    let mut out = MacroResults {
        energy_ok: true,
        apriori_ok: true,
        decreasing: Vec::new(),
        detail: Vec::new(),
    };
    for dt in [0.0025, 0.00125] {
        let domain = MacroDomain::new(128, 0.05, dt, false)?;
        let runs = convergence_runs(
            &ens.members[0],
            &table,
            &[0.25, 0.125, 0.0625],
            InitialCondition::Bump { amplitude: 0.1 },
            &domain,
            &StepOptions::default(),
        )?;
        let s = &runs.study;
        let mut max_excess = runs.homogenized.max_excess();
        out.energy_ok &= runs.homogenized.completed && runs.homogenized.energy_inequality_holds();
        for t in &runs.fine {
            out.energy_ok &= t.completed && t.energy_inequality_holds();
            max_excess = max_excess.max(t.max_excess());
        }
        out.apriori_ok &= s.rows.iter().all(|r| r.apriori_ok);
        out.decreasing.push(s.strictly_decreasing());
        let errs: Vec<String> = s.rows.iter().map(|r| format!("{:.3e}", r.l2_error)).collect();
        out.detail.push(format!(
            "dt={dt}: errors [{}], max excess {max_excess:.2e}, C = {:.3}",
            errs.join(" "),
            s.apriori.constant
        ));
    }
    Ok(out)
}

fn c8_energy_inequality(s: &mut Shared) -> rheohom::Result<Outcome> {
    let m = s.macro_results()?;
    Ok(Outcome {
        passed: m.energy_ok && m.apriori_ok,
        detail: format!(
            "ledger ok = {}, a-priori ok = {}; {}",
            m.energy_ok,
            m.apriori_ok,
            m.detail.join("; ")
        ),
    })
}

fn c9_eps_convergence(s: &mut Shared) -> rheohom::Result<Outcome> {
    let m = s.macro_results()?;
    Ok(Outcome {
        passed: m.decreasing.iter().all(|&d| d),
        detail: m.detail.join("; "),
    })
}

impl Shared {
    fn macro_results(&mut self) -> rheohom::Result<Rc<MacroResults>> {
        if self.flow.is_none() {
            self.flow = Some(Rc::new(laminate_macro()?));
        }
        Ok(self.flow.clone().expect("set above"))
    }
}

const PIPELINE_CONFIG: &str = r#"
name = "acceptance-percolation"
seed = 77

[medium]
kind = "percolation"
q = 0.7
alpha = 1.85
beta = 3.0

[law]
alpha = 1.85
beta = 3.0

[rve]
side = 8.0
cells = 32
realizations = 6

[xi_grid]
directions = 4
radii = [0.5, 1.0, 2.0, 4.0]

[gates]
delta2_directions = 3
monotonicity_pairs = 10
birkhoff_side = 8.0
birkhoff_windows = [2.0, 4.0, 8.0]
birkhoff_realizations = 6

[macro]
cells = 32
horizon = 0.02
dt = 0.005
eps = [0.5, 0.25]
time_refinement = false
"#;

fn csv_files(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable output dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                let rel = p
                    .strip_prefix(root)
                    .expect("inside root")
                    .to_string_lossy()
                    .into_owned();
                out.push((rel, std::fs::read(&p).expect("readable csv")));
            }
        }
    }
    out.sort();
    out
}

fn c10_reproducibility(_: &mut Shared) -> rheohom::Result<Outcome> {
    let cfg = validate_config(PIPELINE_CONFIG)?;
    let dir = tempfile::tempdir().map_err(|e| rheohom::Error::InvalidInput(e.to_string()))?;
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ma = run_pipeline(&cfg, &RunOptions::pipeline(&a))?;
    // The second run uses a one-thread pool: results must not depend on it.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| rheohom::Error::InvalidInput(e.to_string()))?;
    let mb = pool.install(|| run_pipeline(&cfg, &RunOptions::pipeline(&b)))?;
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let same = fa == fb && !fa.is_empty();
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    Ok(Outcome {
        passed: same && ma.complete() && mb.complete(),
        detail: format!(
            "{} CSV files compared, {} differ{}; stages complete = {}",
            fa.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(" ({})", differing.join(", "))
            },
            ma.complete() && mb.complete()
        ),
    })
}

fn main() {
    let criteria: [(usize, &str, Check); 10] = [
        (1, "constant-medium exactness", c1_constant_medium),
        (2, "laminate oracle", c2_laminate_oracle),
        (3, "delta2 condition", c3_delta2),
        (4, "coercivity and growth", c4_coercivity_growth),
        (5, "strict monotonicity", c5_monotonicity),
        (6, "deterministic limit", c6_deterministic_limit),
        (7, "Birkhoff identity", c7_birkhoff),
        (8, "energy inequality", c8_energy_inequality),
        (9, "eps-convergence", c9_eps_convergence),
        (10, "reproducibility", c10_reproducibility),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut shared = Shared::default();
    let mut failures = 0;
    let total = Instant::now();
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let (passed, detail) = match check(&mut shared) {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {failures} failed, total {:.1}s",
        total.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
