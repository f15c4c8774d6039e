//! Bounded kernels.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
}

/// A bounded, symmetric kernel `k(x, y)` with known supremum `K₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kind: KernelKind,
    bandwidth: f64,
    // 1 / (2σ₀²), cached for the hot loops.
    inv_two_var: f64,
}

impl KernelSpec {
    /// Gaussian kernel `exp(-(x - y)² / (2σ₀²))`, bounded by `K₀ = 1`.
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            bandwidth,
            inv_two_var: 1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Supremum of the kernel over the real line.
    pub fn bound(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian => 1.0,
        }
    }

    /// Checked evaluation; rejects non-finite arguments.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluation without input validation, for data already checked at the
    /// API boundary. Symmetric bit-for-bit: `(x - y)²` and `(y - x)²` agree.
    #[inline]
    pub fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => {
                let d = x - y;
                (-d * d * self.inv_two_var).exp()
            }
        }
    }

    /// `Σ_b k(x, ys[b])` in index order.
    #[inline]
    pub(crate) fn row_sum(&self, x: f64, ys: &[f64]) -> f64 {
        ys.iter().map(|&y| self.eval_unchecked(x, y)).sum()
    }
}
