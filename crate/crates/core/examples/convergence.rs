//! ε-convergence of Stokes-mode laminate flow towards the homogenized flow,
//! at two step sizes.

use std::time::Instant;

use rheohom::effective::{estimate_effective_table, Ensemble, EnsembleSpec, XiGrid};
use rheohom::flow::{convergence_study, EffectiveLawTable, InitialCondition, MacroDomain, StepOptions};
use rheohom::media::MediumSpec;

fn main() -> rheohom::Result<()> {
    let cells: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let ensemble = Ensemble::generate(EnsembleSpec {
        medium: MediumSpec::Laminate {
            axis: 0,
            a: vec![1.0, 3.0],
            p: vec![2.0, 2.0],
        },
        side: 1.0,
        cells: 64,
        realizations: 1,
        seed: 3,
    })?;
    let (table, _) = estimate_effective_table(&XiGrid::default(), &ensemble, 1e-10)?;
    let table = EffectiveLawTable::load(table, "laminate", 3)?;
    let eps = [0.25, 0.125, 0.0625];
    for dt in [0.0025, 0.00125] {
        let t = Instant::now();
        let domain = MacroDomain::new(cells, 0.05, dt, false)?;
        let study = convergence_study(
            &ensemble.members[0],
            &table,
            &eps,
            InitialCondition::Bump { amplitude: 0.1 },
            &domain,
            &StepOptions::default(),
        )?;
        println!(
            "dt = {dt}: a-priori C = {:.4}, {:.2?}",
            study.apriori.constant,
            t.elapsed()
        );
        for r in &study.rows {
            println!(
                "  eps={:<7} L2(Q_T)={:.4e} at T/3,2T/3,T = {:.3e} {:.3e} {:.3e} energy ok={} a-priori ok={}",
                r.eps,
                r.l2_error,
                r.snapshot_errors[0],
                r.snapshot_errors[1],
                r.snapshot_errors[2],
                r.energy_inequality,
                r.apriori_ok
            );
        }
        println!(
            "  strictly decreasing = {}, log-log slope = {:.3}",
            study.strictly_decreasing(),
            study.rate
        );
    }
    Ok(())
}
