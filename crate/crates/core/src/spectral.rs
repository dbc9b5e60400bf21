//! Fast diagonal solves on square grids.
//!
//! Two bases are supported: the periodic Fourier basis on an `n × n` torus
//! (used by the cell problem) and the sine basis on the `(n-1) × (n-1)`
//! interior nodes of a Dirichlet box (used by the macroscale stepper).
//! Fields are stored row-major with index `i * n + j`, `i` along axis 1.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// `k h` for Fourier mode `m` on an `n`-periodic grid.
pub fn periodic_angle(m: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * m as f64 / n as f64
}

/// `k h` for sine mode `m` (1-based) on a box with `n` intervals.
pub fn sine_angle(m: usize, n: usize) -> f64 {
    std::f64::consts::PI * m as f64 / n as f64
}

pub struct PeriodicSpectrum {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicSpectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicSpectrum").field("n", &self.n).finish()
    }
}

impl PeriodicSpectrum {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        PeriodicSpectrum {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, buf: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // rows
        fft.process(buf);
        // columns through a transpose
        let mut t = vec![Complex::new(0.0, 0.0); n * n];
        transpose(buf, &mut t, n);
        fft.process(&mut t);
        transpose(&t, buf, n);
    }

    /// `out = F⁻¹[ F[rhs] / symbol ]`, with modes where `symbol == 0`
    /// projected out. `symbol` is indexed like the field.
    pub fn solve_diagonal(&self, rhs: &[f64], symbol: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = rhs.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.forward);
        for (z, &s) in buf.iter_mut().zip(symbol) {
            if s > 0.0 {
                *z /= s;
            } else {
                *z = Complex::new(0.0, 0.0);
            }
        }
        self.transform(&mut buf, &self.inverse);
        let scale = 1.0 / (n * n) as f64;
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re * scale;
        }
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

/// Type-I discrete sine transform on `m × m` interior values via a
/// `2(m+1)` complex FFT of the odd extension.
pub struct SineSpectrum {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SineSpectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineSpectrum").field("m", &self.m).finish()
    }
}

impl SineSpectrum {
    /// `m` interior values per axis (`m = n - 1` for `n` intervals).
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        SineSpectrum {
            m,
            fft: planner.plan_fft_forward(2 * (m + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn dst_rows(&self, data: &mut [f64]) {
        let m = self.m;
        let len = 2 * (m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for row in data.chunks_mut(m) {
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for (k, &v) in row.iter().enumerate() {
                buf[k + 1] = Complex::new(v, 0.0);
                buf[len - 1 - k] = Complex::new(-v, 0.0);
            }
            self.fft.process(&mut buf);
            for (k, r) in row.iter_mut().enumerate() {
                *r = -0.5 * buf[k + 1].im;
            }
        }
    }

    /// Unnormalized 2D DST-I in place.
    pub fn dst2(&self, data: &mut [f64]) {
        let m = self.m;
        self.dst_rows(data);
        let mut t = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                t[j * m + i] = data[i * m + j];
            }
        }
        self.dst_rows(&mut t);
        for i in 0..m {
            for j in 0..m {
                data[j * m + i] = t[i * m + j];
            }
        }
    }

    /// `out = S⁻¹[ S[rhs] / symbol ]` on the interior grid.
    pub fn solve_diagonal(&self, rhs: &[f64], symbol: &[f64], out: &mut [f64]) {
        out.copy_from_slice(rhs);
        self.dst2(out);
        for (o, &s) in out.iter_mut().zip(symbol) {
            *o = if s > 0.0 { *o / s } else { 0.0 };
        }
        self.dst2(out);
        let norm = 2.0 / (self.m + 1) as f64;
        let scale = norm * norm;
        out.iter_mut().for_each(|o| *o *= scale);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_solve_inverts_laplacian() {
        let n = 16;
        let sp = PeriodicSpectrum::new(n);
        // zero-mean smooth field
        let u: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                (periodic_angle(i, n)).sin() + (2.0 * periodic_angle(j, n)).cos()
            })
            .collect();
        let idx = |i: usize, j: usize| (i % n) * n + (j % n);
        let mut lap = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                lap[idx(i, j)] = 4.0 * u[idx(i, j)]
                    - u[idx(i + 1, j)]
                    - u[idx(i + n - 1, j)]
                    - u[idx(i, j + 1)]
                    - u[idx(i, j + n - 1)];
            }
        }
        let symbol: Vec<f64> = (0..n * n)
            .map(|k| {
                let (a, b) = (k / n, k % n);
                4.0 * (periodic_angle(a, n) / 2.0).sin().powi(2) + 4.0 * (periodic_angle(b, n) / 2.0).sin().powi(2)
            })
            .collect();
        let mut out = vec![0.0; n * n];
        sp.solve_diagonal(&lap, &symbol, &mut out);
        for (a, b) in out.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_solve_inverts_dirichlet_laplacian() {
        let n = 12;
        let m = n - 1;
        let sp = SineSpectrum::new(m);
        let u: Vec<f64> = (0..m * m).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= m as isize || j >= m as isize {
                0.0
            } else {
                u[i as usize * m + j as usize]
            }
        };
        let mut lap = vec![0.0; m * m];
        for i in 0..m as isize {
            for j in 0..m as isize {
                lap[i as usize * m + j as usize] =
                    4.0 * at(i, j) - at(i + 1, j) - at(i - 1, j) - at(i, j + 1) - at(i, j - 1);
            }
        }
        let symbol: Vec<f64> = (0..m * m)
            .map(|k| {
                let (a, b) = (k / m + 1, k % m + 1);
                4.0 * (sine_angle(a, n) / 2.0).sin().powi(2) + 4.0 * (sine_angle(b, n) / 2.0).sin().powi(2)
            })
            .collect();
        let mut out = vec![0.0; m * m];
        sp.solve_diagonal(&lap, &symbol, &mut out);
        for (a, b) in out.iter().zip(&u) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
