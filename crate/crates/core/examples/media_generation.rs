//! Sample Voronoi and percolation realizations, print their exponent
//! statistics and run the spatial-vs-ensemble averaging check.

use rheohom::media::{birkhoff_identity_check, ExponentLaw, MediumSpec, TorusGrid};

fn main() -> rheohom::Result<()> {
    let grid = TorusGrid::new(32.0, 128)?;
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
        let members = (0..8)
            .map(|s| spec.generate(grid, s))
            .collect::<rheohom::Result<Vec<_>>>()?;
        let m = &members[0];
        let (lo, hi) = m.exponent_range();
        let mean = m.p.iter().sum::<f64>() / m.len() as f64;
        println!(
            "{:<12} p in [{lo:.3}, {hi:.3}], mean {mean:.4}, fraction at 3.0 = {:.3}",
            spec.tag(),
            m.exponent_fraction(3.0)
        );
        let rep = birkhoff_identity_check(&members, |_, _| 1.5, &[4.0, 8.0, 16.0, 32.0])?;
        for w in &rep.windows {
            println!(
                "  window {:>4}: spatial {:.4} discrepancy {:.3e}",
                w.window, w.spatial.mean, w.discrepancy
            );
        }
        println!("  ensemble {:.4} +- {:.4}", rep.ensemble.mean, rep.ensemble.std_error);
    }
    Ok(())
}
