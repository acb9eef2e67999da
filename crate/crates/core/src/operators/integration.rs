use crate::error::{check_len, Result};
use crate::Vector;

/// Left-endpoint discretization of `f ↦ ∫₀ᵗ f` on a grid of `n` cells:
/// the lower-triangular all-ones matrix times `scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOp {
    n: usize,
    scale: f64,
}

impl IntegrationOp {
    /// Grid spacing `1/n` on `[0, 1]`.
    pub fn new(n: usize) -> Self {
        IntegrationOp {
            n,
            scale: 1.0 / n as f64,
        }
    }

    /// Arbitrary grid spacing, e.g. `1.0` for integration over `[0, n]`.
    pub fn with_scale(n: usize, scale: f64) -> Self {
        IntegrationOp { n, scale }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub(crate) fn apply_raw(&self, x: &[f64]) -> Vector {
        let mut acc = 0.0;
        Vector::from_iterator(
            self.n,
            x.iter().map(|v| {
                acc += v;
                acc * self.scale
            }),
        )
    }

    pub(crate) fn adjoint_raw(&self, y: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.n);
        let mut acc = 0.0;
        for i in (0..self.n).rev() {
            acc += y[i];
            out[i] = acc * self.scale;
        }
        out
    }

    /// Exact inverse: scaled first difference.
    pub fn apply_inverse(&self, h: &Vector) -> Result<Vector> {
        check_len("integration inverse", self.n, h.len())?;
        let mut prev = 0.0;
        Ok(Vector::from_iterator(
            self.n,
            h.iter().map(|&v| {
                let d = (v - prev) / self.scale;
                prev = v;
                d
            }),
        ))
    }
}
