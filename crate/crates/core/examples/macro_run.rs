//! Stokes-mode decay of a bump on the two-phase laminate: fine scale at one
//! ε against the homogenized law tabulated from cell solves.

use std::time::Instant;

use rheohom::effective::{estimate_effective_table, Ensemble, EnsembleSpec, XiGrid};
use rheohom::flow::{
    apriori_bound, convective_integrability, solve_fine, solve_homogenized, EffectiveLawTable, InitialCondition,
    MacroDomain, StepOptions,
};
use rheohom::media::MediumSpec;

fn main() -> rheohom::Result<()> {
    let spec = EnsembleSpec {
        medium: MediumSpec::Laminate {
            axis: 0,
            a: vec![1.0, 3.0],
            p: vec![2.0, 2.0],
        },
        side: 1.0,
        cells: 64,
        realizations: 1,
        seed: 7,
    };
    let ensemble = Ensemble::generate(spec)?;
    let t = Instant::now();
    let (table, _) = estimate_effective_table(&XiGrid::default(), &ensemble, 1e-10)?;
    let table = EffectiveLawTable::load(table, "laminate cell table", 7)?;
    println!(
        "table built in {:.2?}, spot check ok = {}",
        t.elapsed(),
        table.spot_check.passed()
    );

    let cells: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let domain = MacroDomain::new(cells, 0.05, 0.0025, false)?;
    let ic = InitialCondition::Bump { amplitude: 0.1 };
    let opts = StepOptions::default();

    let t = Instant::now();
    let hom = solve_homogenized(&table, ic, &domain, &opts)?;
    println!(
        "homogenized: completed={} E(T)/E(0)={:.4} max excess={:.2e} iters={} {:.2?}",
        hom.completed,
        hom.states.last().unwrap().kinetic_energy / hom.initial_energy(),
        hom.max_excess(),
        hom.ledger.iter().map(|e| e.iterations).sum::<usize>(),
        t.elapsed()
    );
    for eps in [0.25, 0.125, 0.0625] {
        let t = Instant::now();
        let fine = solve_fine(&ensemble.members[0], eps, ic, &domain, &opts)?;
        let iters: usize = fine.ledger.iter().map(|e| e.iterations).sum();
        println!(
            "eps={eps:<7} completed={} E(T)/E(0)={:.4} max excess={:.2e} a-priori ratio={:.4} iters={} {:.2?}",
            fine.completed,
            fine.states.last().unwrap().kinetic_energy / fine.initial_energy(),
            fine.max_excess(),
            apriori_bound(&fine).ratio,
            iters,
            t.elapsed()
        );
        let c = convective_integrability(&fine, 1.75)?;
        println!("  int ||u^2||_L^{:.3} dt = {:.4e}", c.conjugate, c.integral);
    }
    Ok(())
}
