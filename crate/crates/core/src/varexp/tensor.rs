use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::media::TorusGrid;

/// Symmetric 2×2 tensor stored by its upper triangle.
///
/// The inner product is the Frobenius one, `ξ·η = Σᵢⱼ ξᵢⱼ ηᵢⱼ`, so the
/// off-diagonal entry counts twice.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor { xx, xy, yy }
    }

    pub const fn diag(xx: f64, yy: f64) -> Self {
        SymTensor { xx, xy: 0.0, yy }
    }

    /// `sym(e₁ ⊗ e₂)` scaled by `2s`, i.e. off-diagonal entry `s`.
    pub const fn shear(s: f64) -> Self {
        SymTensor {
            xx: 0.0,
            xy: s,
            yy: 0.0,
        }
    }

    /// Trace-free tensor from orthonormal coordinates: `x[0]` along
    /// `diag(1,-1)/√2`, `x[1]` along the shear `(e₁⊗e₂ + e₂⊗e₁)/√2`.
    /// Then `|ξ| = |x|`.
    pub fn from_trace_free(x: [f64; 2]) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        SymTensor {
            xx: x[0] * s,
            xy: x[1] * s,
            yy: -x[0] * s,
        }
    }

    /// Polar form of [`from_trace_free`](Self::from_trace_free).
    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::from_trace_free([radius * angle.cos(), radius * angle.sin()])
    }

    /// Orthonormal coordinates of the trace-free part.
    pub fn trace_free_coords(&self) -> [f64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [(self.xx - self.yy) * s, 2.0 * self.xy * s]
    }

    #[inline]
    pub fn dot(&self, o: &SymTensor) -> f64 {
        self.xx * o.xx + 2.0 * self.xy * o.xy + self.yy * o.yy
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, o: &SymTensor) -> f64 {
        (self.xx - o.xx)
            .abs()
            .max((self.xy - o.xy).abs())
            .max((self.yy - o.yy).abs())
    }

    pub fn components(&self) -> [f64; 3] {
        [self.xx, self.xy, self.yy]
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    #[inline]
    fn add(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl AddAssign for SymTensor {
    #[inline]
    fn add_assign(&mut self, o: SymTensor) {
        self.xx += o.xx;
        self.xy += o.xy;
        self.yy += o.yy;
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    #[inline]
    fn sub(self, o: SymTensor) -> SymTensor {
        SymTensor::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    #[inline]
    fn neg(self) -> SymTensor {
        SymTensor::new(-self.xx, -self.xy, -self.yy)
    }
}

impl Mul<SymTensor> for f64 {
    type Output = SymTensor;
    #[inline]
    fn mul(self, t: SymTensor) -> SymTensor {
        SymTensor::new(self * t.xx, self * t.xy, self * t.yy)
    }
}

/// One tensor per cell of a torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensorField {
    pub grid: TorusGrid,
    pub values: Vec<SymTensor>,
}

impl SymTensorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SymTensorField {
            grid,
            values: vec![SymTensor::ZERO; grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, t: SymTensor) -> Self {
        SymTensorField {
            grid,
            values: vec![t; grid.len()],
        }
    }

    /// Cell average.
    pub fn mean(&self) -> SymTensor {
        let mut s = SymTensor::ZERO;
        for v in &self.values {
            s += *v;
        }
        (1.0 / self.values.len() as f64) * s
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(SymTensor::norm).collect()
    }

    /// Discrete `L²` norm with cell-area weights.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_area() * self.values.iter().map(SymTensor::norm_sq).sum::<f64>()).sqrt()
    }

    /// `Σ_cells ⟨self, other⟩ h²`.
    pub fn inner(&self, other: &SymTensorField) -> f64 {
        self.grid.cell_area()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.dot(b))
                .sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> SymTensorField {
        SymTensorField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * *v).collect(),
        }
    }
}
