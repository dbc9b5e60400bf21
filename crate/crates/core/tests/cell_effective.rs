use rheohom::cell::{solve_corrector, solve_medium, CellOptions, StrainOperator};
use rheohom::effective::{
    estimate_effective_table, estimate_effective_tensor, verify_oddness, Ensemble, EnsembleSpec, LawKind, XiGrid,
};
use rheohom::media::{checkerboard_medium, ExponentLaw, MediumSpec, TorusGrid};
use rheohom::varexp::{SiteLaw, StressLaw, SymTensor};

fn voronoi() -> MediumSpec {
    MediumSpec::Voronoi {
        intensity: 1.0,
        law: ExponentLaw::Uniform { lo: 1.85, hi: 3.0 },
        a_value: 1.0,
        mollify_radius: 0.0,
    }
}

fn tight() -> CellOptions {
    CellOptions {
        tol: 1e-10,
        ..CellOptions::default()
    }
}

#[test]
fn corrector_flux_is_odd() {
    let m = voronoi().generate(TorusGrid::new(4.0, 16).unwrap(), 11).unwrap();
    let xi = SymTensor::from_polar(1.3, 0.4);
    let a = solve_medium(&m, xi, &tight()).unwrap();
    let b = solve_medium(&m, -xi, &tight()).unwrap();
    assert!(a.converged && b.converged);
    assert!((a.flux + b.flux).norm() <= 1e-7 * a.flux.norm());
    assert!((a.energy - b.energy).abs() <= 1e-9 * a.energy);
}

#[test]
fn stress_is_orthogonal_to_divergence_free_strains() {
    let m = voronoi().generate(TorusGrid::new(4.0, 16).unwrap(), 5).unwrap();
    let s = solve_medium(&m, SymTensor::from_polar(2.0, 1.1), &tight()).unwrap();
    assert!(s.converged);
    assert!(s.residual <= 1e-10);
    // The random probe is a restriction of the dual-norm supremum.
    assert!(s.probe_residual <= s.residual * (1.0 + 1e-6) + 1e-14);
}

#[test]
fn corrector_minimizes_the_cell_energy() {
    let grid = TorusGrid::new(4.0, 16).unwrap();
    let m = voronoi().generate(grid, 9).unwrap();
    let law = StressLaw::power_law(&m);
    let xi = SymTensor::from_polar(1.0, 0.2);
    let s = solve_corrector(grid, &law, xi, &tight()).unwrap();
    let psi = s.fields.as_ref().unwrap().psi.clone();
    let op = StrainOperator::new(grid);
    let energy = |psi: &[f64]| {
        let mut e = vec![SymTensor::ZERO; grid.len()];
        op.strain(psi, xi, &mut e);
        e.iter().enumerate().map(|(k, t)| law.potential(k, *t)).sum::<f64>() * grid.cell_area()
    };
    let base = energy(&psi);
    assert!((base - s.energy).abs() <= 1e-12 * base);
    for k in [0usize, 17, 100, 255] {
        for t in [1e-2, -1e-2] {
            let mut q = psi.clone();
            q[k] += t;
            assert!(energy(&q) >= base);
        }
    }
}

#[test]
fn linear_effective_energy_lies_between_bounds() {
    // Reuss and Voigt bounds for a = {1, 4} in equal volume fractions.
    let grid = TorusGrid::new(1.0, 32).unwrap();
    let m = checkerboard_medium(grid, 4, [1.0, 4.0], [2.0, 2.0]).unwrap();
    for angle in [0.0, 0.7, 1.3] {
        let xi = SymTensor::from_polar(1.0, angle);
        let s = solve_medium(&m, xi, &tight()).unwrap();
        let w = s.energy_density;
        let (reuss, voigt) = (0.5 * 1.6, 0.5 * 2.5);
        assert!(w > reuss && w < voigt, "energy {w}");
    }
}

#[test]
fn stationary_one_point_law() {
    // Two-sample Kolmogorov–Smirnov test that p has the same law at two far cells.
    let grid = TorusGrid::new(8.0, 16).unwrap();
    let n = 300;
    let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for s in 0..n as u64 {
        let m = voronoi().generate(grid, 1000 + s).unwrap();
        x.push(m.p[grid.index(0, 0)]);
        y.push(m.p[grid.index(9, 5)]);
    }
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for v in x.iter().chain(&y) {
        let fx = x.partition_point(|t| t <= v) as f64 / n as f64;
        let fy = y.partition_point(|t| t <= v) as f64 / n as f64;
        d = d.max((fx - fy).abs());
    }
    // Critical value at level 0.001.
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} >= {crit}");
}

fn small_percolation(realizations: usize) -> Ensemble {
    Ensemble::generate(EnsembleSpec {
        medium: MediumSpec::Percolation {
            q: 0.6,
            alpha: 1.85,
            beta: 3.0,
        },
        side: 4.0,
        cells: 16,
        realizations,
        seed: 42,
    })
    .unwrap()
}

#[test]
fn effective_tensor_is_odd_and_vanishes_at_zero() {
    let ens = small_percolation(3);
    let xis = [SymTensor::from_polar(0.5, 0.3), SymTensor::from_polar(2.0, 2.0)];
    let rep = verify_oddness(&xis, &ens, 1e-9).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn estimates_are_reproducible_and_cached() {
    let a = small_percolation(3);
    let b = small_percolation(3);
    let xi = SymTensor::from_polar(1.0, 0.5);
    let ea = estimate_effective_tensor(xi, &a, 1e-8).unwrap();
    let eb = estimate_effective_tensor(xi, &b, 1e-8).unwrap();
    assert_eq!(ea.fluxes, eb.fluxes);
    let first = a.solve(LawKind::Coefficient, xi, 1e-8).unwrap();
    let again = a.solve(LawKind::Coefficient, xi, 1e-8).unwrap();
    assert!(std::sync::Arc::ptr_eq(&first, &again));
}

#[test]
fn primed_records_must_match_seeds() {
    let a = small_percolation(2);
    let xi = SymTensor::from_polar(1.0, 0.5);
    let records = a.solve(LawKind::Unit, xi, 1e-8).unwrap().as_ref().clone();
    let b = small_percolation(2);
    b.prime(LawKind::Unit, xi, 1e-8, records.clone()).unwrap();
    assert_eq!(*b.solve(LawKind::Unit, xi, 1e-8).unwrap(), records);
    let c = small_percolation(3);
    assert!(c.prime(LawKind::Unit, xi, 1e-8, records).is_err());
}

#[test]
fn table_reproduces_node_estimates() {
    let ens = small_percolation(2);
    let grid = XiGrid {
        radii: vec![0.5, 1.0, 2.0],
        directions: 6,
    };
    let (table, estimates) = estimate_effective_table(&grid, &ens, 1e-10).unwrap();
    for (k, e) in estimates.iter().enumerate() {
        let s = table.eval(e.xi);
        let w = table.values[k];
        assert!((s.value - w).abs() <= 1e-10 * w, "{:?}", e.xi);
        let radial = e.xi.dot(&e.mean);
        assert!((e.xi.dot(&s.gradient) - radial).abs() <= 1e-9 * radial, "{:?}", e.xi);
    }
}
