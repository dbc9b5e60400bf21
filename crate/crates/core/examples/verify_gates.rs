//! Structural checks of the effective law on a small Voronoi ensemble.

use rheohom::effective::{
    random_trace_free_pairs, trace_free_directions, verify_delta2, verify_monotonicity, verify_oddness, Ensemble,
    EnsembleSpec,
};
use rheohom::media::{ExponentLaw, MediumSpec};

fn main() -> rheohom::Result<()> {
    let ensemble = Ensemble::generate(EnsembleSpec {
        medium: MediumSpec::Voronoi {
            intensity: 1.0,
            law: ExponentLaw::Uniform { lo: 1.85, hi: 3.0 },
            a_value: 1.0,
            mollify_radius: 0.0,
        },
        side: 8.0,
        cells: 32,
        realizations: 6,
        seed: 9,
    })?;
    let tol = 1e-8;
    let xis = trace_free_directions(3, 1.0);
    let d2 = verify_delta2(&xis, &[0.3, 1.0, 3.0], &ensemble, 1.85, 3.0, tol)?;
    println!("delta2: {} violations in {} rows", d2.violations, d2.rows.len());
    let mono = verify_monotonicity(&random_trace_free_pairs(10, 0.25, 4.0, 1), &ensemble, tol)?;
    println!("monotonicity: passed = {}", mono.passed);
    let odd = verify_oddness(&xis, &ensemble, tol)?;
    println!(
        "oddness: zero flux {:.2e}, odd defect {:.2e}",
        odd.zero_flux, odd.max_odd_defect
    );
    Ok(())
}
