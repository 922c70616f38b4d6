//! The combined one-directional operator
//! `δ u_i = d₊,ᵢ δ'₊ u_i + d₋,ᵢ δ'₋ u_i + gᵢ (u_{i+1} - u_{i-1}) / (2Δx)`
//! along a single grid line, and the Crank–Nicolson matrices built from it.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{FracError, Result};
use crate::frac_coeffs::{FractionalOrder, OperatorRows};
use crate::frac_operators::{dot, spline_scale};
use crate::grid::UniformGrid1D;
use crate::linalg::DenseLu;

#[derive(Debug, Clone)]
pub struct LineOperator {
    grid: UniformGrid1D,
    rows: Arc<OperatorRows>,
    scale: f64,
    d_plus: Vec<f64>,
    d_minus: Vec<f64>,
    convection: Vec<f64>,
}

impl LineOperator {
    /// Coefficient vectors are node samples, `N + 1` entries each; only the
    /// interior entries are used.
    pub fn new(
        grid: UniformGrid1D,
        order: FractionalOrder,
        d_plus: Vec<f64>,
        d_minus: Vec<f64>,
        convection: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.n_cells();
        if n < 2 {
            return Err(FracError::arg("line operator needs at least 2 cells"));
        }
        for (name, v) in [("d_plus", &d_plus), ("d_minus", &d_minus), ("convection", &convection)] {
            if v.len() != grid.n_nodes() {
                return Err(FracError::arg(format!(
                    "{name} has {} samples, expected {}",
                    v.len(),
                    grid.n_nodes()
                )));
            }
            if let Some(i) = v.iter().position(|c| !c.is_finite()) {
                return Err(FracError::arg(format!("{name} is not finite at node {i}")));
            }
        }
        for (name, v) in [("d_plus", &d_plus), ("d_minus", &d_minus)] {
            if let Some(i) = (1..n).find(|&i| v[i] < 0.0) {
                return Err(FracError::arg(format!(
                    "diffusion coefficient {name} is negative ({}) at x = {}",
                    v[i],
                    grid.node(i)
                )));
            }
        }
        Ok(Self {
            grid,
            rows: OperatorRows::shared(order, n)?,
            scale: spline_scale(order, grid.spacing()),
            d_plus,
            d_minus,
            convection,
        })
    }

    /// Samples `d₊`, `d₋` and `g` at the grid nodes.
    pub fn from_fns(
        grid: UniformGrid1D,
        order: FractionalOrder,
        d_plus: impl Fn(f64) -> f64,
        d_minus: impl Fn(f64) -> f64,
        convection: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new(grid, order, grid.sample(d_plus), grid.sample(d_minus), grid.sample(convection))
    }

    #[inline]
    pub fn grid(&self) -> &UniformGrid1D {
        &self.grid
    }

    #[inline]
    pub fn rows(&self) -> &OperatorRows {
        &self.rows
    }

    /// Same grid, table and interior coefficients.
    pub fn same_coefficients(&self, other: &Self) -> bool {
        let n = self.grid.n_cells();
        self.grid == other.grid
            && Arc::ptr_eq(&self.rows, &other.rows)
            && self.d_plus[1..n] == other.d_plus[1..n]
            && self.d_minus[1..n] == other.d_minus[1..n]
            && self.convection[1..n] == other.convection[1..n]
    }

    /// `δ u` at interior node `i`.
    #[inline]
    pub fn apply_at(&self, u: &[f64], i: usize) -> f64 {
        let mut frac = 0.0;
        let dp = self.d_plus[i];
        if dp != 0.0 {
            frac += dp * dot(self.rows.left(i), &u[..i + 2]);
        }
        let dm = self.d_minus[i];
        if dm != 0.0 {
            frac += dm * dot(self.rows.right(i), &u[i - 1..]);
        }
        let g = self.convection[i];
        self.scale * frac + g * (u[i + 1] - u[i - 1]) / (2.0 * self.grid.spacing())
    }

    /// `out_i = δ u_i` on interior nodes and 0 at both ends.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n_cells();
        assert_eq!(u.len(), n + 1);
        assert_eq!(out.len(), n + 1);
        out[0] = 0.0;
        out[n] = 0.0;
        for i in 1..n {
            out[i] = self.apply_at(u, i);
        }
    }

    /// Dense `(N+1)²` matrix of `δ`, boundary rows zero.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.grid.n_cells();
        let h = self.grid.spacing();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        for i in 1..n {
            let (dp, dm) = (self.scale * self.d_plus[i], self.scale * self.d_minus[i]);
            for (k, p) in self.rows.left(i).iter().enumerate() {
                m[(i, k)] += dp * p;
            }
            for (off, q) in self.rows.right(i).iter().enumerate() {
                m[(i, i - 1 + off)] += dm * q;
            }
            let c = self.convection[i] / (2.0 * h);
            m[(i, i + 1)] += c;
            m[(i, i - 1)] -= c;
        }
        m
    }

    /// `I + weight·δ` with identity boundary rows.
    pub fn shifted_matrix(&self, weight: f64) -> DMatrix<f64> {
        let n = self.grid.n_cells();
        let mut m = self.to_dense() * weight;
        for i in 0..=n {
            m[(i, i)] += 1.0;
        }
        m
    }

    /// Factors `I - (Δt/2) δ` (identity boundary rows).
    pub fn factor_implicit(&self, dt: f64, context: &str) -> Result<DenseLu> {
        DenseLu::factor(self.shifted_matrix(-0.5 * dt), context)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn dense_matches_apply() {
        let g = UniformGrid1D::new(0.0, 1.0, 12).unwrap();
        let op = LineOperator::from_fns(g, ord(1.4), |x| 1.0 + x, |x| 2.0 - x, |x| 0.3 * x).unwrap();
        let u: Vec<f64> = g.nodes().map(|x| (4.0 * x).sin() + x).collect();
        let mut out = vec![0.0; 13];
        op.apply(&u, &mut out);
        let m = op.to_dense();
        for i in 0..13 {
            let row: f64 = (0..13).map(|k| m[(i, k)] * u[k]).sum();
            assert!((row - out[i]).abs() < 1e-10 * (1.0 + out[i].abs()));
        }
    }

    #[test]
    fn negative_diffusion_rejected() {
        let g = UniformGrid1D::new(0.0, 1.0, 6).unwrap();
        let r = LineOperator::from_fns(g, ord(1.5), |x| x - 0.5, |_| 1.0, |_| 0.0);
        assert!(matches!(r, Err(FracError::InvalidArgument(_))));
    }

    #[test]
    fn convection_sign() {
        // g u_x with u = x must give g at every interior node.
        let g = UniformGrid1D::new(0.0, 1.0, 8).unwrap();
        let op = LineOperator::from_fns(g, ord(1.5), |_| 0.0, |_| 0.0, |_| 0.7).unwrap();
        let u: Vec<f64> = g.nodes().collect();
        for i in 1..8 {
            assert!((op.apply_at(&u, i) - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_equality() {
        let g = UniformGrid1D::new(0.0, 1.0, 8).unwrap();
        let a = LineOperator::from_fns(g, ord(1.5), |_| 1.0, |_| 1.0, |_| 0.0).unwrap();
        let b = LineOperator::from_fns(g, ord(1.5), |_| 1.0, |_| 1.0, |_| 0.0).unwrap();
        let c = LineOperator::from_fns(g, ord(1.5), |_| 1.0, |_| 1.5, |_| 0.0).unwrap();
        assert!(a.same_coefficients(&b));
        assert!(!a.same_coefficients(&c));
    }
}
