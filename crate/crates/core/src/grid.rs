//! Uniform grids and nodal fields.

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};

/// Uniform grid `x_i = x_left + i Δx`, `i = 0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid1D {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    spacing: f64,
}

impl UniformGrid1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(FracError::arg(format!(
                "grid bounds must satisfy x_left < x_right, got [{x_left}, {x_right}]"
            )));
        }
        if n_cells == 0 {
            return Err(FracError::arg("grid needs at least one cell"));
        }
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            spacing: (x_right - x_left) / n_cells as f64,
        })
    }

    #[inline]
    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    #[inline]
    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node coordinate; the last node is exactly `x_right`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_right
        } else {
            self.x_left + i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(move |i| self.node(i))
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

/// Node values `u_0..=u_N` on a 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField1D {
    grid: UniformGrid1D,
    values: Vec<f64>,
}

impl ScalarField1D {
    pub fn new(grid: UniformGrid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(FracError::arg(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FracError::arg(format!("field value at node {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub fn zeros(grid: UniformGrid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_nodes()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &UniformGrid1D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Node values on a tensor grid, stored with `x` fastest: entry `(i, j)`
/// lives at `j * (N_x + 1) + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid_x: UniformGrid1D,
    grid_y: UniformGrid1D,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid_x: UniformGrid1D, grid_y: UniformGrid1D) -> Self {
        Self {
            grid_x,
            grid_y,
            values: vec![0.0; grid_x.n_nodes() * grid_y.n_nodes()],
        }
    }

    pub fn from_fn(
        grid_x: UniformGrid1D,
        grid_y: UniformGrid1D,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut out = Self::zeros(grid_x, grid_y);
        for j in 0..grid_y.n_nodes() {
            let y = grid_y.node(j);
            for i in 0..grid_x.n_nodes() {
                out.set(i, j, f(grid_x.node(i), y));
            }
        }
        out
    }

    pub fn from_values(grid_x: UniformGrid1D, grid_y: UniformGrid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid_x.n_nodes() * grid_y.n_nodes() {
            return Err(FracError::arg("2D field size does not match its grids"));
        }
        Ok(Self {
            grid_x,
            grid_y,
            values,
        })
    }

    #[inline]
    pub fn grid_x(&self) -> &UniformGrid1D {
        &self.grid_x
    }

    #[inline]
    pub fn grid_y(&self) -> &UniformGrid1D {
        &self.grid_y
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        j * self.grid_x.n_nodes() + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.values[idx] = v;
    }

    /// The line `u_{·,j}` (fixed `y_j`).
    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid_x.n_nodes();
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        let nx = self.grid_x.n_nodes();
        &mut self.values[j * nx..(j + 1) * nx]
    }

    /// Copy of the line `u_{i,·}` (fixed `x_i`).
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.grid_y.n_nodes()).map(|j| self.get(i, j)).collect()
    }

    pub fn set_column(&mut self, i: usize, col: &[f64]) {
        for (j, &v) in col.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Swaps the roles of `x` and `y`.
    pub fn transposed(&self) -> Self {
        Self::from_fn_indexed(self.grid_y, self.grid_x, |i, j| self.get(j, i))
    }

    fn from_fn_indexed(
        grid_x: UniformGrid1D,
        grid_y: UniformGrid1D,
        f: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut out = Self::zeros(grid_x, grid_y);
        for j in 0..grid_y.n_nodes() {
            for i in 0..grid_x.n_nodes() {
                out.set(i, j, f(i, j));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_hit_endpoints() {
        let g = UniformGrid1D::new(0.0, 1.0, 3).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(3), 1.0);
        assert!((g.spacing() * 3.0 - 1.0).abs() < 1e-15);
        assert_eq!(g.nodes().len(), 4);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(UniformGrid1D::new(1.0, 0.0, 4).is_err());
        assert!(UniformGrid1D::new(0.0, 1.0, 0).is_err());
        assert!(UniformGrid1D::new(0.0, f64::NAN, 4).is_err());
    }

    #[test]
    fn field_length_and_finiteness() {
        let g = UniformGrid1D::new(0.0, 1.0, 4).unwrap();
        assert!(ScalarField1D::new(g, vec![0.0; 4]).is_err());
        assert!(ScalarField1D::new(g, vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(ScalarField1D::new(g, vec![0.0; 5]).is_ok());
    }

    #[test]
    fn field2d_layout() {
        let gx = UniformGrid1D::new(0.0, 1.0, 2).unwrap();
        let gy = UniformGrid1D::new(0.0, 2.0, 3).unwrap();
        let f = ScalarField2D::from_fn(gx, gy, |x, y| x + 10.0 * y);
        let y = gy.node(1);
        assert_eq!(f.row(1), &[10.0 * y, 0.5 + 10.0 * y, 1.0 + 10.0 * y]);
        assert_eq!(f.column(2).len(), 4);
        let t = f.transposed();
        assert_eq!(t.get(3, 1), f.get(1, 3));
        assert_eq!(t.transposed(), f);
    }
}
