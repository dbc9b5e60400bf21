//! Solve cell problems on a Voronoi and a percolation realization and report
//! flux averages, residuals and iteration counts.

use std::time::Instant;

use rheohom::cell::{solve_medium, CellOptions};
use rheohom::media::{ExponentLaw, MediumSpec, TorusGrid};
use rheohom::varexp::SymTensor;

fn main() -> rheohom::Result<()> {
    let grid = TorusGrid::new(16.0, 64)?;
    let specs = [
        MediumSpec::Voronoi {
            intensity: 1.0,
            law: ExponentLaw::Uniform { lo: 1.85, hi: 3.0 },
            a_value: 1.0,
            mollify_radius: 0.0,
        },
        MediumSpec::Percolation {
            q: 0.7,
            alpha: 1.85,
            beta: 3.0,
        },
    ];
    for spec in &specs {
        let medium = spec.generate(grid, 11)?;
        for r in [0.25, 1.0, 8.0] {
            let xi = SymTensor::from_polar(r, 0.3);
            let t = Instant::now();
            let sol = solve_medium(&medium, xi, &CellOptions::default())?;
            println!(
                "{:<12} |xi|={:<5} flux=({:+.6e}, {:+.6e}, {:+.6e}) residual={:.2e} probe={:.2e} iters={} evals={} {:.2?}",
                spec.tag(),
                r,
                sol.flux.xx,
                sol.flux.xy,
                sol.flux.yy,
                sol.residual,
                sol.probe_residual,
                sol.solver.iterations,
                sol.solver.evaluations,
                t.elapsed()
            );
        }
    }
    Ok(())
}
