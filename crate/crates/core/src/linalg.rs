//! Dense LU with partial pivoting (nalgebra) behind a slice interface.

use nalgebra::{DMatrix, DVectorViewMut, Dyn, LU};

use crate::error::{FracError, Result};

/// Factored square matrix, reused across time steps.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: LU<f64, Dyn, Dyn>,
    n: usize,
}

impl DenseLu {
    /// Factors `matrix`. A pivot below `1e-13` times the largest matrix
    /// entry is reported as singular.
    pub fn factor(matrix: DMatrix<f64>, context: &str) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() || n == 0 {
            return Err(FracError::arg(format!(
                "LU needs a non-empty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.amax();
        let lu = matrix.lu();
        let u = lu.u();
        for row in 0..n {
            let pivot = u[(row, row)];
            if !pivot.is_finite() || pivot.abs() <= 1e-13 * scale {
                return Err(FracError::Singular {
                    context: context.to_string(),
                    row,
                    pivot,
                });
            }
        }
        Ok(Self { lu, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.n, "right-hand side length mismatch");
        let mut view = DVectorViewMut::from_slice(rhs, self.n);
        let ok = self.lu.solve_mut(&mut view);
        debug_assert!(ok, "factorization was checked non-singular");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let lu = DenseLu::factor(m.clone(), "test").unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|r| (0..3).map(|c| m[(r, c)] * x[c]).sum()).collect();
        lu.solve_in_place(&mut b);
        for (got, want) in b.iter().zip(x) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn reports_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(DenseLu::factor(m, "s"), Err(FracError::Singular { .. })));
    }
}
