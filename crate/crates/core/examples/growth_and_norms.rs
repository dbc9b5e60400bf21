//! Exponent admissibility, fitted growth constants and Luxemburg norms for
//! a percolation realization.

use rheohom::media::{MediumSpec, TorusGrid};
use rheohom::varexp::{
    alpha0, exponent_gate, growth_samples, luxemburg_norm, verify_growth, StressLaw, SymTensor, SymTensorField,
};

fn main() -> rheohom::Result<()> {
    println!("alpha0(2) = {:.6}, alpha0(3) = {:.6}", alpha0(2), alpha0(3));
    for (a, b, d) in [(1.85, 3.0, 2), (1.8, 3.0, 3), (2.0, 6.0, 3)] {
        match exponent_gate(a, b, d) {
            Ok(g) => println!("[{a}, {b}] in d={d}: admissible, alpha* = {:?}", g.alpha_star),
            Err(e) => println!("[{a}, {b}] in d={d}: {e}"),
        }
    }

    let grid = TorusGrid::new(8.0, 32)?;
    let medium = MediumSpec::Percolation {
        q: 0.7,
        alpha: 1.85,
        beta: 3.0,
    }
    .generate(grid, 3)?;
    let law = StressLaw::power_law(&medium);
    let report = verify_growth(&law, &growth_samples(2000, 1));
    println!(
        "c0 = {:.4}, c1 = {:.4}, passed = {}",
        report.c0, report.c1, report.passed
    );

    let weights = vec![grid.cell_area() / grid.volume(); grid.len()];
    for r in [0.1, 1.0, 10.0] {
        let field = SymTensorField::constant(grid, SymTensor::from_polar(r, 0.0));
        println!("|| {r} ||_L^p(.) = {:.6}", luxemburg_norm(&field, &medium.p, &weights));
    }
    Ok(())
}
