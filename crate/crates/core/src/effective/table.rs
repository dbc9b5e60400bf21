use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ncg::{self, NcgOptions, Objective};
use crate::rng::{stream, Purpose};
use crate::varexp::SymTensor;
use crate::{Error, Result};

/// Polar grid on trace-free strains: `directions` angles `kπ/directions`
/// (the opposite half follows from oddness) times a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub directions: usize,
    pub radii: Vec<f64>,
}

impl Default for XiGrid {
    fn default() -> Self {
        XiGrid {
            directions: 8,
            radii: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

impl XiGrid {
    /// Default directions with radii doubling from 0.25 to 32, wide enough
    /// for conjugates at stresses of the default table.
    pub fn extended() -> Self {
        XiGrid {
            directions: 8,
            radii: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        }
    }

    /// The same grid with `k` further doublings of the largest radius.
    pub fn with_outer_radii(&self, k: usize) -> Self {
        let mut radii = self.radii.clone();
        let r = self.max_radius();
        radii.extend((1..=k).map(|j| r * f64::powi(2.0, j as i32)));
        XiGrid {
            directions: self.directions,
            radii,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions < 2 || self.directions % 2 != 0 {
            return Err(Error::Config(
                "xi grid needs an even number (>= 2) of directions".into(),
            ));
        }
        if self.radii.len() < 2 || self.radii.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(Error::Config("xi grid radii must be positive and increasing".into()));
        }
        Ok(())
    }

    pub fn angle(&self, d: usize) -> f64 {
        PI * d as f64 / self.directions as f64
    }

    /// Node tensors in radius-major order.
    pub fn nodes(&self) -> Vec<SymTensor> {
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.radii {
            for d in 0..self.directions {
                out.push(SymTensor::from_polar(r, self.angle(d)));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.directions
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().expect("nonempty radii")
    }
}

/// Trigonometric interpolant of period π through `N` equispaced samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Trig {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Trig {
    fn fit(samples: &[f64]) -> Trig {
        let n = samples.len();
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        for (j, &f) in samples.iter().enumerate() {
            let phi = 2.0 * PI * j as f64 / n as f64;
            for k in 0..=half {
                a[k] += f * (k as f64 * phi).cos();
                b[k] += f * (k as f64 * phi).sin();
            }
        }
        for k in 0..=half {
            let w = if k == 0 || k == half { 1.0 } else { 2.0 } / n as f64;
            a[k] *= w;
            b[k] *= w;
        }
        b[0] = 0.0;
        b[half] = 0.0;
        Trig { a, b }
    }

    /// Value and derivative in θ, given `(cos 2θ, sin 2θ)`. Harmonics come
    /// from the angle-addition recurrence.
    fn eval(&self, c1: f64, s1: f64) -> (f64, f64) {
        let (mut c, mut s) = (1.0, 0.0);
        let mut v = 0.0;
        let mut dv = 0.0;
        for k in 0..self.a.len() {
            let kf = k as f64;
            v += self.a[k] * c + self.b[k] * s;
            dv += 2.0 * kf * (-self.a[k] * s + self.b[k] * c);
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
        }
        (v, dv)
    }
}

/// Interpolated potential `W` and its gradient at one strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSample {
    pub value: f64,
    pub gradient: SymTensor,
    /// Query radius exceeds the tabulated range. Below the smallest radius
    /// the power law towards the origin is used without a flag.
    pub extrapolated: bool,
}

/// Even convex potential tabulated on an [`XiGrid`], evaluated with an
/// interpolant whose gradient is analytic, so the derived stress is odd,
/// vanishes at zero and is exactly conservative.
///
/// Angle: trigonometric interpolation of `W` and of `ξ·∇W` per radius.
/// Radius: cubic Hermite of `ln W` in `ln r` with slope `ξ·∇W / W`; power
/// laws beyond the end radii. Isotropic power laws and quadratic potentials
/// are reproduced exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialTable {
    pub grid: XiGrid,
    /// `W` at the nodes, radius-major.
    pub values: Vec<f64>,
    /// Tabulated `∇W` at the nodes.
    pub gradients: Vec<SymTensor>,
    w_fit: Vec<Trig>,
    r_fit: Vec<Trig>,
}

impl PotentialTable {
    pub fn new(grid: XiGrid, values: Vec<f64>, gradients: Vec<SymTensor>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() || gradients.len() != grid.len() {
            return Err(Error::InvalidInput("table size does not match the xi grid".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(
                "tabulated potential must be positive and finite".into(),
            ));
        }
        let nodes = grid.nodes();
        let nd = grid.directions;
        let mut w_fit = Vec::with_capacity(grid.radii.len());
        let mut r_fit = Vec::with_capacity(grid.radii.len());
        for k in 0..grid.radii.len() {
            let w: Vec<f64> = values[k * nd..(k + 1) * nd].to_vec();
            let rw: Vec<f64> = (0..nd).map(|d| nodes[k * nd + d].dot(&gradients[k * nd + d])).collect();
            w_fit.push(Trig::fit(&w));
            r_fit.push(Trig::fit(&rw));
        }
        Ok(PotentialTable {
            grid,
            values,
            gradients,
            w_fit,
            r_fit,
        })
    }

    /// `(ln W, γ)` at radius index `k` with their θ-derivatives.
    fn radial_data(&self, k: usize, c2: f64, s2: f64) -> [f64; 4] {
        let (w, dw) = self.w_fit[k].eval(c2, s2);
        let (rw, drw) = self.r_fit[k].eval(c2, s2);
        let w = w.max(f64::MIN_POSITIVE);
        [w.ln(), dw / w, rw / w, (drw * w - rw * dw) / (w * w)]
    }

    pub fn eval(&self, xi: SymTensor) -> PotentialSample {
        let x = xi.trace_free_coords();
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r == 0.0 {
            return PotentialSample {
                value: 0.0,
                gradient: SymTensor::ZERO,
                extrapolated: false,
            };
        }
        let (ct, st) = (x[0] / r, x[1] / r);
        let (c2, s2) = (ct * ct - st * st, 2.0 * st * ct);
        let radii = &self.grid.radii;
        let s = r.ln();
        let last = radii.len() - 1;
        let (h, hs, ht, extrapolated) = if r <= radii[0] || r >= radii[last] {
            let k = if r <= radii[0] { 0 } else { last };
            let [l, dl, g, dg] = self.radial_data(k, c2, s2);
            let ds = s - radii[k].ln();
            (l + g * ds, g, dl + dg * ds, r > radii[last])
        } else {
            let k = radii.partition_point(|&q| q <= r) - 1;
            let (s0, s1) = (radii[k].ln(), radii[k + 1].ln());
            let del = s1 - s0;
            let t = (s - s0) / del;
            let [l0, dl0, g0, dg0] = self.radial_data(k, c2, s2);
            let [l1, dl1, g1, dg1] = self.radial_data(k + 1, c2, s2);
            let (t2, t3) = (t * t, t * t * t);
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            let d00 = 6.0 * t2 - 6.0 * t;
            let d10 = 3.0 * t2 - 4.0 * t + 1.0;
            let d01 = -6.0 * t2 + 6.0 * t;
            let d11 = 3.0 * t2 - 2.0 * t;
            let h = h00 * l0 + h10 * del * g0 + h01 * l1 + h11 * del * g1;
            let hs = (d00 * l0 + d10 * del * g0 + d01 * l1 + d11 * del * g1) / del;
            let ht = h00 * dl0 + h10 * del * dg0 + h01 * dl1 + h11 * del * dg1;
            (h, hs, ht, false)
        };
        let w = h.exp();
        let gr = w * hs / r;
        let gt = w * ht / r;
        PotentialSample {
            value: w,
            gradient: SymTensor::from_trace_free([gr * ct - gt * st, gr * st + gt * ct]),
            extrapolated,
        }
    }

    /// Largest deviation of the interpolant gradient from the tabulated
    /// gradients, relative to their magnitude.
    pub fn gradient_consistency(&self) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.gradients)
            .map(|(x, g)| (self.eval(*x).gradient - *g).norm() / g.norm().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Checks `(∇W(ξ₁) − ∇W(ξ₂))·(ξ₁ − ξ₂) > 0` on random pairs inside the
    /// tabulated range.
    pub fn monotonicity_spot_check(&self, pairs: usize, seed: u64) -> MonotonicitySpotCheck {
        let mut rng = stream(seed, Purpose::XiPairs);
        let (lo, hi) = (self.grid.radii[0].ln(), self.grid.max_radius().ln());
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let r = rng.random_range(lo..hi).exp();
            SymTensor::from_polar(r, rng.random_range(0.0..2.0 * PI))
        };
        let mut violations = 0;
        let mut min_margin = f64::INFINITY;
        for _ in 0..pairs {
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            let d = a - b;
            let m = (self.eval(a).gradient - self.eval(b).gradient).dot(&d);
            let scale = d.norm_sq().max(f64::MIN_POSITIVE);
            if !(m > 0.0) {
                violations += 1;
            }
            min_margin = min_margin.min(m / scale);
        }
        MonotonicitySpotCheck {
            pairs,
            violations,
            min_normalized_margin: min_margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicitySpotCheck {
    pub pairs: usize,
    pub violations: usize,
    /// `min (A₁ − A₂)·(ξ₁ − ξ₂) / |ξ₁ − ξ₂|²`.
    pub min_normalized_margin: f64,
}

impl MonotonicitySpotCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Numerical Young conjugate `f*(η) ≈ max_{|ξ| ≤ r_max} ξ·η − f(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateEstimate {
    pub eta: SymTensor,
    pub value: f64,
    pub argmax: SymTensor,
    /// The maximizer reached the outer radius; `value` is then only a lower
    /// bound of the conjugate.
    pub lower_bound_only: bool,
}

struct Dual<'a> {
    table: &'a PotentialTable,
    eta: [f64; 2],
}

impl Objective for Dual<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        let s = self.table.eval(SymTensor::from_trace_free([x[0], x[1]]));
        let gc = s.gradient.trace_free_coords();
        g[0] = gc[0] - self.eta[0];
        g[1] = gc[1] - self.eta[1];
        s.value - x[0] * self.eta[0] - x[1] * self.eta[1]
    }
    fn precondition(&mut self, g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
    }
}

/// Legendre transform of the tabulated potential over the trace-free part
/// of `η`: dense polar search including every node, then local refinement.
pub fn legendre_transform(table: &PotentialTable, eta: SymTensor) -> ConjugateEstimate {
    let e = eta.trace_free_coords();
    let rmax = table.grid.max_radius();
    let objective = |x: [f64; 2]| x[0] * e[0] + x[1] * e[1] - table.eval(SymTensor::from_trace_free(x)).value;
    let mut best = ([0.0, 0.0], 0.0);
    let consider = |x: [f64; 2], best: &mut ([f64; 2], f64)| {
        let v = objective(x);
        if v > best.1 {
            *best = (x, v);
        }
    };
    for sign in [1.0, -1.0] {
        for x in table.grid.nodes() {
            let c = x.trace_free_coords();
            consider([sign * c[0], sign * c[1]], &mut best);
        }
    }
    const RADII: usize = 96;
    const ANGLES: usize = 128;
    let lo = (table.grid.radii[0] / 8.0).ln();
    for i in 0..RADII {
        let r = (lo + (rmax.ln() - lo) * i as f64 / (RADII - 1) as f64).exp();
        for j in 0..ANGLES {
            let t = 2.0 * PI * j as f64 / ANGLES as f64;
            consider([r * t.cos(), r * t.sin()], &mut best);
        }
    }
    let mut x = best.0.to_vec();
    if best.1 > 0.0 {
        let mut dual = Dual { table, eta: e };
        let tol = 1e-11 * (e[0].hypot(e[1])).max(1e-300);
        let opts = NcgOptions {
            tol,
            max_iter: 200,
            ..NcgOptions::default()
        };
        if ncg::minimize(&mut dual, &mut x, &opts).is_ok() && x[0].hypot(x[1]) <= rmax {
            let v = objective([x[0], x[1]]);
            if v > best.1 {
                best = ([x[0], x[1]], v);
            }
        }
    }
    let reach = best.0[0].hypot(best.0[1]);
    // A maximizer at or beyond the last ring means the true one may lie outside.
    let beyond = x[0].hypot(x[1]) > rmax;
    ConjugateEstimate {
        eta,
        value: best.1,
        argmax: SymTensor::from_trace_free(best.0),
        lower_bound_only: reach >= rmax * (1.0 - 1e-9) || beyond,
    }
}
