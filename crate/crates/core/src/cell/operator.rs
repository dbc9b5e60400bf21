use crate::media::TorusGrid;
use crate::spectral::{periodic_angle, PeriodicSpectrum};
use crate::varexp::SymTensor;

/// Discrete symmetrized gradient of the velocity `w = (∂₂ψ, −∂₁ψ)` induced
/// by a periodic stream function on cell centres.
///
/// Components: `v₁₁ = Mψ`, `v₂₂ = −Mψ`, `v₁₂ = ½(δ₂² − δ₁²)ψ` with `M` the
/// diagonal mixed difference and `δₖ²` compact second differences. Every
/// entry is a difference of shifted copies, so `Σ v = 0` and `tr v = 0` hold
/// exactly.
#[derive(Debug)]
pub struct StrainOperator {
    grid: TorusGrid,
    spectrum: PeriodicSpectrum,
    /// Symbol of `h² SᵀS`, zero on its kernel.
    symbol: Vec<f64>,
}

impl StrainOperator {
    pub fn new(grid: TorusGrid) -> Self {
        let n = grid.cells;
        let h = grid.spacing();
        let h2 = h * h;
        let mut symbol = vec![0.0; n * n];
        for m1 in 0..n {
            let t1 = periodic_angle(m1, n);
            for m2 in 0..n {
                let t2 = periodic_angle(m2, n);
                let mhat = -t1.sin() * t2.sin() / h2;
                let d1 = -4.0 * (0.5 * t1).sin().powi(2) / h2;
                let d2 = -4.0 * (0.5 * t2).sin().powi(2) / h2;
                let s = h2 * (2.0 * mhat * mhat + 0.5 * (d2 - d1) * (d2 - d1));
                // Kernel modes (constants and the checkerboard) are gauge.
                symbol[m1 * n + m2] = if s > 1e-9 / h2 { s } else { 0.0 };
            }
        }
        StrainOperator {
            grid,
            spectrum: PeriodicSpectrum::new(n),
            symbol,
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// `out = ξ + Sψ`.
    pub fn strain(&self, psi: &[f64], xi: SymTensor, out: &mut [SymTensor]) {
        let n = self.grid.cells;
        let h2 = self.grid.spacing().powi(2);
        let inv_m = 1.0 / (4.0 * h2);
        let inv_d = 1.0 / h2;
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for j in 0..n {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let mixed = (psi[ip * n + jp] - psi[im * n + jp] - psi[ip * n + jm] + psi[im * n + jm]) * inv_m;
                let d1 = psi[ip * n + j] + psi[im * n + j];
                let d2 = psi[i * n + jp] + psi[i * n + jm];
                // (δ₂² − δ₁²)ψ; the centre terms cancel.
                let shear = 0.5 * (d2 - d1) * inv_d;
                out[i * n + j] = SymTensor::new(xi.xx + mixed, xi.xy + shear, xi.yy - mixed);
            }
        }
    }

    /// `out = h² Sᵀσ`, the gradient of `h² Σ Φ(ξ + Sψ)` when `σ = A`.
    pub fn adjoint(&self, sigma: &[SymTensor], out: &mut [f64]) {
        let n = self.grid.cells;
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for j in 0..n {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let dev = |k: usize| sigma[k].xx - sigma[k].yy;
                let mixed = dev(ip * n + jp) - dev(im * n + jp) - dev(ip * n + jm) + dev(im * n + jm);
                let s = |k: usize| sigma[k].xy;
                let shear = (s(i * n + jp) + s(i * n + jm)) - (s(ip * n + j) + s(im * n + j));
                out[i * n + j] = 0.25 * mixed + shear;
            }
        }
    }

    /// Solves `scale · h² SᵀS z = g` on the complement of the kernel.
    pub fn precondition(&self, g: &[f64], scale: f64, out: &mut [f64]) {
        self.spectrum.solve_diagonal(g, &self.symbol, out);
        let inv = 1.0 / scale;
        for o in out.iter_mut() {
            *o *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: usize) -> Vec<f64> {
        (0..n * n).map(|k| ((k * 7919) % 113) as f64 / 113.0 - 0.4).collect()
    }

    #[test]
    fn corrector_is_mean_free_and_trace_free() {
        let g = TorusGrid::new(3.0, 12).unwrap();
        let op = StrainOperator::new(g);
        let psi = field(12);
        let mut v = vec![SymTensor::ZERO; g.len()];
        op.strain(&psi, SymTensor::ZERO, &mut v);
        let mut s = SymTensor::ZERO;
        for t in &v {
            assert_eq!(t.trace(), 0.0);
            s += *t;
        }
        assert!(s.norm() < 1e-10, "{s:?}");
    }

    #[test]
    fn adjoint_identity() {
        let g = TorusGrid::new(2.0, 10).unwrap();
        let op = StrainOperator::new(g);
        let psi = field(10);
        let sigma: Vec<SymTensor> = (0..100)
            .map(|k| SymTensor::new((k as f64).sin(), (k as f64 * 0.3).cos(), (k as f64 * 1.7).sin()))
            .collect();
        let mut v = vec![SymTensor::ZERO; 100];
        op.strain(&psi, SymTensor::ZERO, &mut v);
        let lhs: f64 = g.cell_area() * v.iter().zip(&sigma).map(|(a, b)| a.dot(b)).sum::<f64>();
        let mut gt = vec![0.0; 100];
        op.adjoint(&sigma, &mut gt);
        let rhs: f64 = gt.iter().zip(&psi).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn preconditioner_inverts_the_normal_operator() {
        let g = TorusGrid::new(1.0, 16).unwrap();
        let op = StrainOperator::new(g);
        let psi = field(16);
        let mut v = vec![SymTensor::ZERO; 256];
        op.strain(&psi, SymTensor::ZERO, &mut v);
        let mut rhs = vec![0.0; 256];
        op.adjoint(&v, &mut rhs);
        let mut back = vec![0.0; 256];
        op.precondition(&rhs, 1.0, &mut back);
        let mut v2 = vec![SymTensor::ZERO; 256];
        op.strain(&back, SymTensor::ZERO, &mut v2);
        for (a, b) in v.iter().zip(&v2) {
            assert!(a.max_abs_diff(b) < 1e-8 * (1.0 + a.norm()));
        }
    }
}
