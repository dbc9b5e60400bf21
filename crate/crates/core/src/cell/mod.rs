//! Periodic cell problem: the corrector of a macroscopic strain is found by
//! minimizing the cell energy over symmetrized gradients of divergence-free
//! fields, parametrized by a stream function.

mod operator;
mod solver;
mod study;

pub use operator::StrainOperator;
pub(crate) use solver::solve_with_operator;
pub use solver::{
    divergence_free_test_fields, orthogonality_probe, solve_corrector, solve_medium, CellOptions, CellStart,
    CorrectorFields, CorrectorSolution, FluxAverage, PROBE_FIELDS,
};
pub use study::{corrector_uniqueness_probe, resolution_study, ResolutionRow, UniquenessProbe};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{constant_medium, laminate_medium, TorusGrid};
    use crate::varexp::{StressLaw, SymTensor};

    #[test]
    fn constant_medium_has_zero_corrector() {
        let g = TorusGrid::new(4.0, 16).unwrap();
        let m = constant_medium(g, 1.0, 3.0).unwrap();
        let xi = SymTensor::from_polar(2.0, 0.7);
        let s = solve_medium(&m, xi, &CellOptions::default()).unwrap();
        assert!(s.converged);
        assert!(s.residual <= 1e-10);
        let v = &s.fields.as_ref().unwrap().v;
        assert!(v.l2_norm() <= 1e-10);
        let exact = xi.norm() * xi;
        assert!(s.flux.max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn laminate_shear_is_harmonic_mean() {
        let g = TorusGrid::new(1.0, 32).unwrap();
        let m = laminate_medium(g, 0, &[1.0, 3.0], &[2.0, 2.0]).unwrap();
        let s = solve_medium(&m, SymTensor::shear(0.5), &CellOptions::default()).unwrap();
        assert!(s.converged, "{:?}", s.solver);
        // Unit engineering shear: response 2 A₁₂ = harmonic mean of a.
        assert!((2.0 * s.flux.xy - 1.5).abs() < 1e-6, "{:?}", s.flux);
        let v = &s.fields.as_ref().unwrap().v;
        let mean = v.mean();
        assert!(mean.norm() < 1e-12);
    }

    #[test]
    fn laminate_deviator_is_arithmetic_mean() {
        let g = TorusGrid::new(1.0, 32).unwrap();
        let m = laminate_medium(g, 0, &[1.0, 3.0], &[2.0, 2.0]).unwrap();
        let s = solve_medium(&m, SymTensor::diag(1.0, -1.0), &CellOptions::default()).unwrap();
        assert!(s.converged);
        assert!((s.flux.xx - 2.0).abs() < 1e-6, "{:?}", s.flux);
    }

    #[test]
    fn zero_strain_gives_zero_flux() {
        let g = TorusGrid::new(2.0, 8).unwrap();
        let m = laminate_medium(g, 1, &[1.0, 2.0], &[1.9, 2.8]).unwrap();
        let law = StressLaw::power_law(&m);
        let p = corrector_uniqueness_probe(g, &law, SymTensor::ZERO, 3, &CellOptions::default(), 5).unwrap();
        assert!(p.all_converged);
        for f in &p.fluxes {
            assert!(f.norm() < 1e-8, "{f:?}");
        }
    }
}
