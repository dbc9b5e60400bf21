//! Monte-Carlo estimate of the effective tensor on a percolation ensemble,
//! its tabulated potential and the numerical conjugate of `f`.

use rheohom::effective::{
    estimate_effective_table, estimate_effective_tensor, estimate_f_table, legendre_transform, Ensemble, EnsembleSpec,
    XiGrid,
};
use rheohom::media::MediumSpec;
use rheohom::varexp::SymTensor;

fn main() -> rheohom::Result<()> {
    let ensemble = Ensemble::generate(EnsembleSpec {
        medium: MediumSpec::Percolation {
            q: 0.7,
            alpha: 1.85,
            beta: 3.0,
        },
        side: 8.0,
        cells: 32,
        realizations: 8,
        seed: 5,
    })?;
    for r in [0.5, 1.0, 2.0] {
        let e = estimate_effective_tensor(SymTensor::from_polar(r, 0.3), &ensemble, 1e-8)?;
        println!(
            "|xi|={r}: A^eff = ({:+.5}, {:+.5}, {:+.5}) se {:.2e}",
            e.mean.xx,
            e.mean.xy,
            e.mean.yy,
            e.se_norm()
        );
    }

    let grid = XiGrid {
        directions: 4,
        radii: vec![0.5, 1.0, 2.0, 4.0],
    };
    let (table, _) = estimate_effective_table(&grid, &ensemble, 1e-8)?;
    let probe = SymTensor::from_polar(1.5, 0.9);
    let s = table.eval(probe);
    println!("interpolated W(1.5) = {:.5}, |A| = {:.5}", s.value, s.gradient.norm());

    let f = estimate_f_table(&grid.with_outer_radii(2), &ensemble, 1e-8)?;
    for eta in [0.5, 1.0, 2.0] {
        let c = legendre_transform(&f, SymTensor::from_polar(eta, 0.2));
        println!(
            "f*({eta}) = {:.5} at |xi| = {:.4}, lower bound only = {}",
            c.value,
            c.argmax.norm(),
            c.lower_bound_only
        );
    }
    Ok(())
}
