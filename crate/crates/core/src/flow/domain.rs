use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::spectral::{sine_angle, SineSpectrum};
use crate::varexp::SymTensor;
use crate::{Error, Result};

/// Unit square `[0,1]²` with `cells` intervals per side, no-slip walls,
/// horizon `T` and base step `Δt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroDomain {
    pub cells: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Include the skew-symmetric convective substep.
    pub convection: bool,
}

impl MacroDomain {
    pub fn new(cells: usize, horizon: f64, dt: f64, convection: bool) -> Result<Self> {
        if cells < 4 {
            return Err(Error::Config("macro grid needs at least 4 intervals".into()));
        }
        if !(dt > 0.0 && horizon > 0.0 && dt.is_finite() && horizon.is_finite()) {
            return Err(Error::Config("time step and horizon must be positive".into()));
        }
        Ok(MacroDomain {
            cells,
            horizon,
            dt,
            convection,
        })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// Base steps to reach the horizon (the last step may overshoot by less
    /// than `Δt/2`, never undershoot by more).
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    /// Interior stream-function unknowns.
    pub fn unknowns(&self) -> usize {
        (self.cells - 1) * (self.cells - 1)
    }

    /// All `(n+1)²` nodes, where the strain is sampled.
    pub fn nodes(&self) -> usize {
        (self.cells + 1) * (self.cells + 1)
    }

    pub fn node_position(&self, k: usize) -> [f64; 2] {
        let n1 = self.cells + 1;
        let h = self.spacing();
        [(k / n1) as f64 * h, (k % n1) as f64 * h]
    }

    /// Trapezoid weights: 1 inside, ½ on edges, ¼ at corners.
    pub fn node_weights(&self) -> Vec<f64> {
        let n = self.cells;
        let mut w = Vec::with_capacity(self.nodes());
        for i in 0..=n {
            for j in 0..=n {
                let ei = if i == 0 || i == n { 0.5 } else { 1.0 };
                let ej = if j == 0 || j == n { 0.5 } else { 1.0 };
                w.push(ei * ej);
            }
        }
        w
    }
}

/// Initial velocity as a stream function on interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Zero,
    /// `ψ₀ = A sin²(πx) sin²(πy)`: smooth, divergence-free, no-slip.
    Bump {
        amplitude: f64,
    },
    /// `ψ₀ = A sin²(πx) sin²(πy) sin(2πx)`: an asymmetric vortex pair.
    Dipole {
        amplitude: f64,
    },
}

impl InitialCondition {
    pub fn tag(&self) -> &'static str {
        match self {
            InitialCondition::Zero => "zero",
            InitialCondition::Bump { .. } => "bump",
            InitialCondition::Dipole { .. } => "dipole",
        }
    }

    pub fn stream_function(&self, domain: &MacroDomain) -> Vec<f64> {
        let n = domain.cells;
        let h = domain.spacing();
        let mut psi = Vec::with_capacity(domain.unknowns());
        for i in 1..n {
            for j in 1..n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let base = (PI * x).sin().powi(2) * (PI * y).sin().powi(2);
                psi.push(match self {
                    InitialCondition::Zero => 0.0,
                    InitialCondition::Bump { amplitude } => amplitude * base,
                    InitialCondition::Dipole { amplitude } => amplitude * base * (2.0 * PI * x).sin(),
                });
            }
        }
        psi
    }
}

/// Discrete operators on the clamped box.
///
/// Kinetic energy uses staggered face velocities, `E = ½ ψᵀGψ` with `G` the
/// 5-point Dirichlet stencil. The strain uses the cell-problem stencil at
/// every node with mirror ghosts `ψ(−1, j) = ψ(1, j)`, which encode the
/// vanishing normal derivative.
#[derive(Debug)]
pub struct BoxOperators {
    pub n: usize,
    h: f64,
    spectrum: SineSpectrum,
    g_symbol: Vec<f64>,
    strain_symbol: Vec<f64>,
}

impl BoxOperators {
    pub fn new(n: usize) -> Self {
        let m = n - 1;
        let h = 1.0 / n as f64;
        let mut g_symbol = vec![0.0; m * m];
        let mut strain_symbol = vec![0.0; m * m];
        for a in 0..m {
            let t1 = sine_angle(a + 1, n);
            for b in 0..m {
                let t2 = sine_angle(b + 1, n);
                let c1 = 4.0 * (0.5 * t1).sin().powi(2);
                let c2 = 4.0 * (0.5 * t2).sin().powi(2);
                g_symbol[a * m + b] = c1 + c2;
                let w1 = t1.sin().powi(2);
                let w2 = t2.sin().powi(2);
                // h² (2 λ_w1 λ_w2 + ½ (λ_c1 − λ_c2)²) with λ = symbol / h².
                strain_symbol[a * m + b] = (2.0 * w1 * w2 + 0.5 * (c1 - c2).powi(2)) / (h * h);
            }
        }
        BoxOperators {
            n,
            h,
            spectrum: SineSpectrum::new(m),
            g_symbol,
            strain_symbol,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn padded(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = n + 3;
        let mut p = vec![0.0; w * w];
        let at = |i: isize, j: isize| ((i + 1) as usize) * w + (j + 1) as usize;
        for i in 1..n {
            for j in 1..n {
                p[at(i as isize, j as isize)] = psi[(i - 1) * (n - 1) + (j - 1)];
            }
        }
        let (ni, nm) = (n as isize, n as isize - 1);
        for j in 0..=ni {
            p[at(-1, j)] = p[at(1, j)];
            p[at(ni + 1, j)] = p[at(nm, j)];
        }
        for i in -1..=ni + 1 {
            p[at(i, -1)] = p[at(i, 1)];
            p[at(i, ni + 1)] = p[at(i, nm)];
        }
        p
    }

    /// Strain `Dψ` at all `(n+1)²` nodes.
    pub fn strain(&self, psi: &[f64], out: &mut [SymTensor]) {
        let n = self.n;
        let w = n + 3;
        let p = self.padded(psi);
        let inv_m = 1.0 / (4.0 * self.h * self.h);
        let inv_d = 1.0 / (self.h * self.h);
        for i in 0..=n {
            let r = (i + 1) * w;
            let (rp, rm) = (r + w, r - w);
            for j in 0..=n {
                let c = j + 1;
                let mixed = (p[rp + c + 1] - p[rm + c + 1] - p[rp + c - 1] + p[rm + c - 1]) * inv_m;
                let shear = 0.5 * ((p[r + c + 1] + p[r + c - 1]) - (p[rp + c] + p[rm + c])) * inv_d;
                out[i * (n + 1) + j] = SymTensor::new(mixed, shear, -mixed);
            }
        }
    }

    /// Adjoint of [`strain`](Self::strain): `out = Dᵀτ` on interior nodes.
    pub fn strain_adjoint(&self, tau: &[SymTensor], out: &mut [f64]) {
        let n = self.n;
        let w = n + 3;
        let mut q = vec![0.0; w * w];
        let cm = 1.0 / (4.0 * self.h * self.h);
        let cd = 1.0 / (self.h * self.h);
        for i in 0..=n {
            let r = (i + 1) * w;
            let (rp, rm) = (r + w, r - w);
            for j in 0..=n {
                let c = j + 1;
                let t = tau[i * (n + 1) + j];
                let m = (t.xx - t.yy) * cm;
                q[rp + c + 1] += m;
                q[rm + c + 1] -= m;
                q[rp + c - 1] -= m;
                q[rm + c - 1] += m;
                let s = t.xy * cd;
                q[r + c + 1] += s;
                q[r + c - 1] += s;
                q[rp + c] -= s;
                q[rm + c] -= s;
            }
        }
        let at = |i: isize, j: isize| ((i + 1) as usize) * w + (j + 1) as usize;
        let (ni, nm) = (n as isize, n as isize - 1);
        for i in -1..=ni + 1 {
            let v = q[at(i, -1)];
            q[at(i, 1)] += v;
            let v = q[at(i, ni + 1)];
            q[at(i, nm)] += v;
        }
        for j in 0..=ni {
            let v = q[at(-1, j)];
            q[at(1, j)] += v;
            let v = q[at(ni + 1, j)];
            q[at(nm, j)] += v;
        }
        for i in 1..n {
            for j in 1..n {
                out[(i - 1) * (n - 1) + (j - 1)] = q[at(i as isize, j as isize)];
            }
        }
    }

    /// `Gψ`, the 5-point stencil `4ψ − Σ neighbours` with zero boundary.
    pub fn apply_g(&self, psi: &[f64], out: &mut [f64]) {
        let m = self.n - 1;
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                let mut s = 4.0 * psi[k];
                if i > 0 {
                    s -= psi[k - m];
                }
                if i + 1 < m {
                    s -= psi[k + m];
                }
                if j > 0 {
                    s -= psi[k - 1];
                }
                if j + 1 < m {
                    s -= psi[k + 1];
                }
                out[k] = s;
            }
        }
    }

    /// `½ ψᵀGψ = ½ ∫|u|²` with staggered face velocities.
    pub fn kinetic_energy(&self, psi: &[f64]) -> f64 {
        let mut g = vec![0.0; psi.len()];
        self.apply_g(psi, &mut g);
        0.5 * crate::ncg::dot(psi, &g)
    }

    /// `G⁻¹ rhs` exactly.
    pub fn solve_g(&self, rhs: &[f64], out: &mut [f64]) {
        self.spectrum.solve_diagonal(rhs, &self.g_symbol, out);
    }

    /// `(G/Δt + a_ref h² DᵀD)⁻¹ g` with a sine-diagonal model of `DᵀD`.
    pub fn precondition(&self, g: &[f64], dt: f64, a_ref: f64, out: &mut [f64]) {
        let h2 = self.h * self.h;
        let sym: Vec<f64> = self
            .g_symbol
            .iter()
            .zip(&self.strain_symbol)
            .map(|(gs, ss)| gs / dt + a_ref * h2 * ss)
            .collect();
        self.spectrum.solve_diagonal(g, &sym, out);
    }

    /// Face velocities `(u₁ on x-faces, u₂ on y-faces)` in the layout used by
    /// the convective operator.
    pub fn face_velocities(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n;
        let m = n - 1;
        let h = self.h;
        let val = |i: usize, j: usize| -> f64 {
            if i == 0 || j == 0 || i == n || j == n {
                0.0
            } else {
                psi[(i - 1) * m + (j - 1)]
            }
        };
        let mut u = Vec::with_capacity(2 * m * n);
        for i in 1..n {
            for j in 0..n {
                u.push((val(i, j + 1) - val(i, j)) / h);
            }
        }
        for i in 0..n {
            for j in 1..n {
                u.push(-(val(i + 1, j) - val(i, j)) / h);
            }
        }
        u
    }

    /// Cell-averaged velocity on each of the `n²` cells, row-major in `x`.
    pub fn cell_velocities(&self, psi: &[f64]) -> Vec<[f64; 2]> {
        let n = self.n;
        let m = n - 1;
        let h = self.h;
        let val = |i: usize, j: usize| -> f64 {
            if i == 0 || j == 0 || i == n || j == n {
                0.0
            } else {
                psi[(i - 1) * m + (j - 1)]
            }
        };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u1 = 0.5 * ((val(i, j + 1) - val(i, j)) + (val(i + 1, j + 1) - val(i + 1, j))) / h;
                let u2 = -0.5 * ((val(i + 1, j) - val(i, j)) + (val(i + 1, j + 1) - val(i, j + 1))) / h;
                out.push([u1, u2]);
            }
        }
        out
    }

    /// `Bᵀ q` for face data `q`, i.e. the adjoint of
    /// [`face_velocities`](Self::face_velocities).
    pub fn face_adjoint(&self, q: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = n - 1;
        let h = self.h;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut add = |i: usize, j: usize, v: f64| {
            if i != 0 && j != 0 && i != n && j != n {
                out[(i - 1) * m + (j - 1)] += v;
            }
        };
        let mut k = 0;
        for i in 1..n {
            for j in 0..n {
                add(i, j + 1, q[k] / h);
                add(i, j, -q[k] / h);
                k += 1;
            }
        }
        for i in 0..n {
            for j in 1..n {
                add(i + 1, j, -q[k] / h);
                add(i, j, q[k] / h);
                k += 1;
            }
        }
    }

    /// Skew-symmetric central advection `N(a) u = ½ (T(a) − T(a)ᵀ) u` on
    /// face velocities; `a` and `u` share the face layout.
    pub fn skew_advection(&self, a: &[f64], u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = n - 1;
        let nx = m * n;
        let inv2h = 0.5 / self.h;
        let xf = |i: isize, j: isize| -> Option<usize> {
            (i >= 1 && i <= m as isize && j >= 0 && j < n as isize).then(|| (i as usize - 1) * n + j as usize)
        };
        let yf = |i: isize, j: isize| -> Option<usize> {
            (i >= 0 && i < n as isize && j >= 1 && j <= m as isize).then(|| nx + i as usize * m + (j as usize - 1))
        };
        let get = |f: Option<usize>| f.map_or(0.0, |k| a[k]);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut push = |row: usize, col: Option<usize>, coef: f64| {
            if let Some(c) = col {
                out[row] += 0.5 * coef * u[c];
                out[c] -= 0.5 * coef * u[row];
            }
        };
        for i in 1..=m as isize {
            for j in 0..n as isize {
                let row = xf(i, j).expect("x face");
                let a1 = a[row];
                let a2 = 0.25 * (get(yf(i - 1, j)) + get(yf(i, j)) + get(yf(i - 1, j + 1)) + get(yf(i, j + 1)));
                push(row, xf(i + 1, j), a1 * inv2h);
                push(row, xf(i - 1, j), -a1 * inv2h);
                push(row, xf(i, j + 1), a2 * inv2h);
                push(row, xf(i, j - 1), -a2 * inv2h);
            }
        }
        for i in 0..n as isize {
            for j in 1..=m as isize {
                let row = yf(i, j).expect("y face");
                let a2 = a[row];
                let a1 = 0.25 * (get(xf(i, j - 1)) + get(xf(i + 1, j - 1)) + get(xf(i, j)) + get(xf(i + 1, j)));
                push(row, yf(i + 1, j), a1 * inv2h);
                push(row, yf(i - 1, j), -a1 * inv2h);
                push(row, yf(i, j + 1), a2 * inv2h);
                push(row, yf(i, j - 1), -a2 * inv2h);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(len: usize) -> Vec<f64> {
        (0..len).map(|k| ((k * 7919) % 101) as f64 / 101.0 - 0.5).collect()
    }

    #[test]
    fn strain_adjoint_identity() {
        let ops = BoxOperators::new(9);
        let psi = field(64);
        let tau: Vec<SymTensor> = (0..100)
            .map(|k| SymTensor::new((k as f64).sin(), (0.3 * k as f64).cos(), (1.3 * k as f64).sin()))
            .collect();
        let mut v = vec![SymTensor::ZERO; 100];
        ops.strain(&psi, &mut v);
        let lhs: f64 = v.iter().zip(&tau).map(|(a, b)| a.dot(b)).sum();
        let mut g = vec![0.0; 64];
        ops.strain_adjoint(&tau, &mut g);
        let rhs = crate::ncg::dot(&g, &psi);
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn g_matches_face_energy_and_inverse() {
        let ops = BoxOperators::new(8);
        let psi = field(49);
        let u = ops.face_velocities(&psi);
        let h2 = ops.spacing().powi(2);
        let e_face = 0.5 * h2 * u.iter().map(|v| v * v).sum::<f64>();
        assert!((e_face - ops.kinetic_energy(&psi)).abs() < 1e-12);
        let mut g = vec![0.0; 49];
        ops.apply_g(&psi, &mut g);
        let mut back = vec![0.0; 49];
        ops.solve_g(&g, &mut back);
        for (a, b) in back.iter().zip(&psi) {
            assert!((a - b).abs() < 1e-12);
        }
        // G = h² BᵀB.
        let mut btb = vec![0.0; 49];
        ops.face_adjoint(&u, &mut btb);
        for (a, b) in btb.iter().zip(&g) {
            assert!((h2 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn advection_is_skew() {
        let ops = BoxOperators::new(8);
        let a = ops.face_velocities(&field(49));
        let u: Vec<f64> = field(2 * 7 * 8).iter().map(|v| v * 1.3 + 0.1).collect();
        let mut out = vec![0.0; u.len()];
        ops.skew_advection(&a, &u, &mut out);
        assert!(crate::ncg::dot(&out, &u).abs() < 1e-12);
    }

    #[test]
    fn strain_is_trace_free_and_vanishes_for_zero() {
        let ops = BoxOperators::new(6);
        let psi = field(25);
        let mut v = vec![SymTensor::ZERO; 49];
        ops.strain(&psi, &mut v);
        assert!(v.iter().all(|t| t.trace() == 0.0));
        // Mixed derivative vanishes on walls (ψ and ∂ₙψ both zero there).
        assert_eq!(v[0].xx, 0.0);
    }
}
