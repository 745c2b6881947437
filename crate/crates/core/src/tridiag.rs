//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Row `i` reads `lower[i] * u[i-1] + diag[i] * u[i] + upper[i] * u[i+1]`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(u.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * u[i];
                if i > 0 {
                    acc += self.lower[i] * u[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * u[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.dim();
        let mut inv_pivot = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut prev_w = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * prev_w
            };
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Solve { row: i, pivot });
            }
            inv_pivot[i] = 1.0 / pivot;
            w[i] = if i + 1 < n { self.upper[i] * inv_pivot[i] } else { 0.0 };
            prev_w = w[i];
        }
        Ok(TridiagonalLu {
            lower: self.lower.clone(),
            inv_pivot,
            w,
        })
    }
}

/// Factored form; for an M-matrix every sweep adds nonnegative terms, so
/// nonnegative right-hand sides give nonnegative solutions exactly.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    w: Vec<f64>,
}

impl TridiagonalLu {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_pivot.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.w[i] * rhs[i + 1];
        }
    }
}
