use rheohom::effective::{power_law_table, XiGrid};
use rheohom::flow::{
    apriori_bound, convergence_study, energy_distance, read_snapshots, solve_fine, solve_homogenized, solve_with_law,
    time_refinement_study, weak_continuity_at_zero, write_snapshots, BoxOperators, EffectiveLawTable, FlowMode,
    InitialCondition, MacroDomain, StepOptions, ENERGY_SLACK,
};
use rheohom::media::{constant_medium, TorusGrid};
use rheohom::varexp::UniformPowerLaw;

const BUMP: InitialCondition = InitialCondition::Bump { amplitude: 0.1 };

fn domain() -> MacroDomain {
    MacroDomain::new(16, 0.02, 0.005, false).unwrap()
}

fn uniform(d: &MacroDomain, a: f64, p: f64) -> UniformPowerLaw {
    UniformPowerLaw { a, p, sites: d.nodes() }
}

fn stokes(d: &MacroDomain, ic: InitialCondition) -> rheohom::flow::MacroTrajectory {
    solve_with_law(
        &uniform(d, 1.0, 2.0),
        None,
        FlowMode::Homogenized,
        ic,
        d,
        &StepOptions::default(),
    )
    .unwrap()
}

#[test]
fn zero_initial_velocity_stays_at_rest() {
    let d = domain();
    let t = stokes(&d, InitialCondition::Zero);
    assert!(t.completed);
    for s in &t.states {
        assert_eq!(s.kinetic_energy, 0.0);
        assert!(s.psi.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn stokes_energy_strictly_decreases() {
    let d = domain();
    let t = stokes(&d, BUMP);
    assert!(t.completed);
    assert_eq!(t.states.len(), d.steps() + 1);
    for w in t.states.windows(2) {
        assert!(w[1].kinetic_energy < w[0].kinetic_energy);
    }
    assert!(t.energy_inequality_holds());
    assert!(t.max_excess() <= ENERGY_SLACK);
}

#[test]
fn linear_step_matches_dense_solve() {
    // One implicit Euler step of the linear Stokes law solves (G/Δt + K)ψ = Gψ₀/Δt
    // with K = h² Sᵀ W S. Assemble K column by column and solve densely.
    let d = MacroDomain::new(6, 0.01, 0.01, false).unwrap();
    let ops = BoxOperators::new(d.cells);
    let m = d.unknowns();
    let h2 = d.spacing().powi(2);
    let w = d.node_weights();
    let mut mat = vec![vec![0.0; m]; m];
    let mut strain = vec![rheohom::varexp::SymTensor::ZERO; d.nodes()];
    let mut col = vec![0.0; m];
    let mut e = vec![0.0; m];
    for j in 0..m {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        ops.apply_g(&e, &mut col);
        for i in 0..m {
            mat[i][j] = col[i] / d.dt;
        }
        ops.strain(&e, &mut strain);
        let tau: Vec<_> = strain.iter().zip(&w).map(|(s, wk)| (wk * h2) * *s).collect();
        ops.strain_adjoint(&tau, &mut col);
        for i in 0..m {
            mat[i][j] += col[i];
        }
    }
    let psi0 = BUMP.stream_function(&d);
    let mut rhs = vec![0.0; m];
    ops.apply_g(&psi0, &mut rhs);
    rhs.iter_mut().for_each(|v| *v /= d.dt);
    let exact = gauss_solve(mat, rhs);

    let t = stokes(&d, BUMP);
    let got = &t.states[1].psi;
    let err = energy_distance(&ops, got, &exact);
    let scale = energy_distance(&ops, &exact, &vec![0.0; m]);
    assert!(err <= 1e-7 * scale, "relative error {}", err / scale);
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

#[test]
fn constant_medium_homogenized_equals_fine() {
    let d = domain();
    let opts = StepOptions::default();
    let medium = constant_medium(TorusGrid::new(1.0, 8).unwrap(), 2.0, 2.5).unwrap();
    let table = EffectiveLawTable::load(power_law_table(&XiGrid::default(), 2.0, 2.5).unwrap(), "exact", 1).unwrap();
    let hom = solve_homogenized(&table, BUMP, &d, &opts).unwrap();
    let fine = solve_fine(&medium, 0.5, BUMP, &d, &opts).unwrap();
    assert!(hom.completed && fine.completed);
    let ops = BoxOperators::new(d.cells);
    for (a, b) in hom.states.iter().zip(&fine.states) {
        let scale = energy_distance(&ops, &b.psi, &vec![0.0; b.psi.len()]);
        assert!(energy_distance(&ops, &a.psi, &b.psi) <= 1e-6 * scale.max(1e-300));
    }
}

#[test]
fn convergence_study_on_constant_medium_is_noise_level() {
    let d = domain();
    let medium = constant_medium(TorusGrid::new(1.0, 8).unwrap(), 1.0, 2.0).unwrap();
    let table = EffectiveLawTable::load(power_law_table(&XiGrid::default(), 1.0, 2.0).unwrap(), "exact", 1).unwrap();
    let study = convergence_study(&medium, &table, &[0.5, 0.25], BUMP, &d, &StepOptions::default()).unwrap();
    assert!(study
        .rows
        .iter()
        .all(|r| r.completed && r.energy_inequality && r.apriori_ok));
    for r in &study.rows {
        assert!(r.l2_error <= 1e-6 * study.reference_norm);
    }
    assert!(study.decreasing_beyond_noise());
}

#[test]
fn apriori_ratio_is_at_most_one_for_convex_decay() {
    let d = domain();
    let t = solve_with_law(
        &uniform(&d, 1.0, 2.5),
        None,
        FlowMode::Homogenized,
        BUMP,
        &d,
        &StepOptions::default(),
    )
    .unwrap();
    let b = apriori_bound(&t);
    assert!(b.ratio <= 1.0 + 1e-8, "ratio {}", b.ratio);
}

#[test]
fn snapshots_roundtrip_and_detect_corruption() {
    let d = domain();
    let t = stokes(&d, BUMP);
    let dir = tempfile::tempdir().unwrap();
    let (bin, json) = write_snapshots(&t, dir.path(), "stokes").unwrap();
    let (header, states) = read_snapshots(&json).unwrap();
    assert_eq!(header.unknowns, d.unknowns());
    assert_eq!(states.len(), t.states.len());
    for (a, b) in states.iter().zip(&t.states) {
        assert_eq!(a.psi, b.psi);
        assert_eq!(a.time, b.time);
    }
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[3] ^= 1;
    std::fs::write(&bin, bytes).unwrap();
    assert!(read_snapshots(&json).is_err());
}

#[test]
fn weak_continuity_defect_vanishes_at_start() {
    let d = domain();
    let t = stokes(&d, InitialCondition::Dipole { amplitude: 0.1 });
    let probe = weak_continuity_at_zero(&t, 5, 4).unwrap();
    assert!(probe.passed, "{probe:?}");
}

#[test]
fn halving_dt_shrinks_the_change() {
    let d = MacroDomain::new(12, 0.02, 0.005, false).unwrap();
    let r = time_refinement_study(&d, |dd| {
        solve_with_law(
            &uniform(dd, 1.0, 2.5),
            None,
            FlowMode::Homogenized,
            BUMP,
            dd,
            &StepOptions::default(),
        )
    })
    .unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn convection_conserves_energy_in_the_ledger() {
    let d = MacroDomain::new(16, 0.02, 0.005, true).unwrap();
    let opts = StepOptions::default();
    let t = solve_with_law(
        &uniform(&d, 0.05, 2.0),
        None,
        FlowMode::Homogenized,
        InitialCondition::Dipole { amplitude: 1.0 },
        &d,
        &opts,
    )
    .unwrap();
    assert!(t.completed);
    for e in &t.ledger {
        assert!((e.energy_convected - e.energy_before).abs() <= 1e-10 * e.energy_before);
    }
    assert!(t.energy_inequality_holds());
}
