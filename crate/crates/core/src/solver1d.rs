//! Crank–Nicolson solver for the 1D two-sided fractional
//! convection–diffusion equation
//!
//! ```text
//! u_t = d₊(x) _{x_L}D_x^α u + d₋(x) _x D_{x_R}^α u + g(x) u_x + s(x, t)
//! ```
//!
//! with Dirichlet data. Each step solves `(I - A) uⁿ⁺¹ = (I + A) uⁿ + Δt sⁿ⁺½`
//! with `A = (Δt/2) δ`, where `(I - A)` is LU-factored once.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{FracError, Result};
use crate::exec::Execution;
use crate::frac_coeffs::FractionalOrder;
use crate::grid::{ScalarField1D, UniformGrid1D};
use crate::line_operator::LineOperator;
use crate::linalg::DenseLu;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Spatial part of a separable source `s(x, t) = S(x) T(t)`, sampled on a grid.
pub trait SpatialForcing1D: Send + Sync {
    fn sample(&self, grid: &UniformGrid1D, exec: Execution) -> Result<Vec<f64>>;
}

#[derive(Clone, Default)]
pub enum Source1D {
    #[default]
    Zero,
    Pointwise(Fn2),
    Separable {
        spatial: Arc<dyn SpatialForcing1D>,
        temporal: Fn1,
    },
}

impl fmt::Debug for Source1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source1D::Zero => "Zero",
            Source1D::Pointwise(_) => "Pointwise",
            Source1D::Separable { .. } => "Separable",
        })
    }
}

/// Source values on the nodes of one grid; separable spatial parts are
/// sampled once.
pub enum ForcingSampler1D {
    Zero,
    Pointwise { nodes: Vec<f64>, source: Fn2 },
    Separable { spatial: Vec<f64>, temporal: Fn1 },
}

impl ForcingSampler1D {
    pub fn new(source: &Source1D, grid: &UniformGrid1D, exec: Execution) -> Result<Self> {
        Ok(match source {
            Source1D::Zero => Self::Zero,
            Source1D::Pointwise(f) => Self::Pointwise {
                nodes: grid.nodes().collect(),
                source: Arc::clone(f),
            },
            Source1D::Separable { spatial, temporal } => Self::Separable {
                spatial: spatial.sample(grid, exec)?,
                temporal: Arc::clone(temporal),
            },
        })
    }

    pub fn fill(&self, t: f64, out: &mut [f64]) {
        match self {
            Self::Zero => out.fill(0.0),
            Self::Pointwise { nodes, source } => {
                for (o, &x) in out.iter_mut().zip(nodes) {
                    *o = source(x, t);
                }
            }
            Self::Separable { spatial, temporal } => {
                let tt = temporal(t);
                for (o, s) in out.iter_mut().zip(spatial) {
                    *o = s * tt;
                }
            }
        }
    }
}

/// One-dimensional problem on `(x_left, x_right) × (0, t_final]`.
#[derive(Clone)]
pub struct Problem1D {
    pub x_left: f64,
    pub x_right: f64,
    pub order: FractionalOrder,
    pub t_final: f64,
    pub d_plus: Fn1,
    pub d_minus: Fn1,
    pub convection: Fn1,
    pub source: Source1D,
    pub initial: Fn1,
    pub boundary_left: Fn1,
    pub boundary_right: Fn1,
    pub exact: Option<Fn2>,
}

impl fmt::Debug for Problem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem1D")
            .field("x_left", &self.x_left)
            .field("x_right", &self.x_right)
            .field("order", &self.order)
            .field("t_final", &self.t_final)
            .field("source", &self.source)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl Problem1D {
    /// Homogeneous problem with zero coefficients, data and source.
    pub fn zero(order: FractionalOrder) -> Self {
        let zero: Fn1 = Arc::new(|_| 0.0);
        Self {
            x_left: 0.0,
            x_right: 1.0,
            order,
            t_final: 1.0,
            d_plus: zero.clone(),
            d_minus: zero.clone(),
            convection: zero.clone(),
            source: Source1D::Zero,
            initial: zero.clone(),
            boundary_left: zero.clone(),
            boundary_right: zero,
            exact: None,
        }
    }

    pub fn grid(&self, n_cells: usize) -> Result<UniformGrid1D> {
        UniformGrid1D::new(self.x_left, self.x_right, n_cells)
    }

    /// The spatial operator `δ` sampled on `grid`.
    pub fn line_operator(&self, grid: UniformGrid1D) -> Result<LineOperator> {
        LineOperator::from_fns(
            grid,
            self.order,
            &*self.d_plus,
            &*self.d_minus,
            &*self.convection,
        )
    }
}

/// Factored Crank–Nicolson system for a fixed grid and step.
#[derive(Debug, Clone)]
pub struct CnSystem {
    grid: UniformGrid1D,
    dt: f64,
    operator: LineOperator,
    implicit: DenseLu,
}

/// Dense `I - A` with Dirichlet identity rows, `A = (Δt/2) δ`.
pub fn assemble_matrix(problem: &Problem1D, grid: UniformGrid1D, dt: f64) -> Result<DMatrix<f64>> {
    check_assembly(grid, dt)?;
    Ok(problem.line_operator(grid)?.shifted_matrix(-0.5 * dt))
}

/// The explicit matrix `A = (Δt/2) δ`, boundary rows zero.
pub fn a_matrix(problem: &Problem1D, grid: UniformGrid1D, dt: f64) -> Result<DMatrix<f64>> {
    check_assembly(grid, dt)?;
    Ok(problem.line_operator(grid)?.to_dense() * (0.5 * dt))
}

fn check_assembly(grid: UniformGrid1D, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FracError::arg(format!("time step must be positive, got {dt}")));
    }
    if grid.n_cells() < 3 {
        return Err(FracError::arg(format!(
            "1D solver needs at least 3 cells, got {}",
            grid.n_cells()
        )));
    }
    Ok(())
}

/// Builds and factors the system for `problem` on `grid`.
pub fn assemble(problem: &Problem1D, grid: UniformGrid1D, dt: f64) -> Result<CnSystem> {
    check_assembly(grid, dt)?;
    let operator = problem.line_operator(grid)?;
    let implicit = operator.factor_implicit(dt, "1D Crank-Nicolson matrix")?;
    Ok(CnSystem {
        grid,
        dt,
        operator,
        implicit,
    })
}

impl CnSystem {
    #[inline]
    pub fn grid(&self) -> &UniformGrid1D {
        &self.grid
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn operator(&self) -> &LineOperator {
        &self.operator
    }

    /// Advances `u` (at `t_n`) by one step. `source_mid` holds `s(·, t_n + Δt/2)`.
    pub fn step_with_source(
        &self,
        u: &[f64],
        t_n: f64,
        source_mid: &[f64],
        problem: &Problem1D,
        step: usize,
    ) -> Result<Vec<f64>> {
        let n = self.grid.n_cells();
        let half = 0.5 * self.dt;
        let mut rhs = vec![0.0; n + 1];
        for i in 1..n {
            rhs[i] = u[i] + half * self.operator.apply_at(u, i) + self.dt * source_mid[i];
        }
        let t_next = t_n + self.dt;
        rhs[0] = (problem.boundary_left)(t_next);
        rhs[n] = (problem.boundary_right)(t_next);
        self.implicit.solve_in_place(&mut rhs);
        if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(FracError::Divergence {
                step,
                location: format!("node {i}"),
            });
        }
        // The LU solve reproduces the identity rows only to rounding.
        rhs[0] = (problem.boundary_left)(t_next);
        rhs[n] = (problem.boundary_right)(t_next);
        Ok(rhs)
    }

    /// One Crank–Nicolson step from `t_n`, evaluating the source pointwise.
    pub fn cn_step(&self, u: &ScalarField1D, t_n: f64, problem: &Problem1D) -> Result<ScalarField1D> {
        let sampler = ForcingSampler1D::new(&problem.source, &self.grid, Execution::Sequential)?;
        let mut s = vec![0.0; self.grid.n_nodes()];
        sampler.fill(t_n + 0.5 * self.dt, &mut s);
        let next = self.step_with_source(u.values(), t_n, &s, problem, 0)?;
        ScalarField1D::new(self.grid, next)
    }
}

/// Number of steps and the step actually used to reach `t_final`.
///
/// Returns `(steps, dt, adjusted)`; `dt` is shrunk to `t_final / steps` when
/// `t_final / dt` is not an integer to within `1e-9` relative.
pub fn time_steps(t_final: f64, dt: f64) -> Result<(usize, f64, bool)> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(FracError::arg(format!("final time must be positive, got {t_final}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FracError::arg(format!("time step must be positive, got {dt}")));
    }
    let ratio = t_final / dt;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * ratio {
        let steps = rounded as usize;
        Ok((steps, t_final / steps as f64, false))
    } else {
        let steps = ratio.ceil().max(1.0) as usize;
        Ok((steps, t_final / steps as f64, true))
    }
}

#[derive(Debug, Clone)]
pub struct Solution1D {
    pub field: ScalarField1D,
    pub steps: usize,
    pub dt: f64,
    /// Whether the requested step was shrunk to divide `t_final`.
    pub dt_adjusted: bool,
    pub t_final: f64,
}

/// Solves `problem` on `n_cells` cells up to `t_final`.
pub fn solve1d(problem: &Problem1D, n_cells: usize, dt: f64) -> Result<Solution1D> {
    solve1d_with(problem, n_cells, dt, Execution::default())
}

/// [`solve1d`] with an explicit execution mode for forcing precomputation.
pub fn solve1d_with(
    problem: &Problem1D,
    n_cells: usize,
    dt: f64,
    exec: Execution,
) -> Result<Solution1D> {
    let (steps, dt_used, adjusted) = time_steps(problem.t_final, dt)?;
    let grid = problem.grid(n_cells)?;
    let system = assemble(problem, grid, dt_used)?;
    let forcing = ForcingSampler1D::new(&problem.source, &grid, exec)?;

    let mut u = grid.sample(&*problem.initial);
    let mut s = vec![0.0; grid.n_nodes()];
    for n in 0..steps {
        let t_n = n as f64 * dt_used;
        forcing.fill(t_n + 0.5 * dt_used, &mut s);
        u = system.step_with_source(&u, t_n, &s, problem, n + 1)?;
    }
    Ok(Solution1D {
        field: ScalarField1D::new(grid, u)?,
        steps,
        dt: dt_used,
        dt_adjusted: adjusted,
        t_final: problem.t_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn ord(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn zero_problem_stays_zero() {
        let p = Problem1D::zero(ord(1.5));
        let sol = solve1d(&p, 10, 0.1).unwrap();
        assert_eq!(sol.steps, 10);
        assert!(sol.field.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vanishing_operators_reduce_to_quadrature_in_time() {
        let mut p = Problem1D::zero(ord(1.5));
        p.x_right = 2.0;
        p.initial = Arc::new(|x| x * (2.0 - x));
        p.source = Source1D::Pointwise(Arc::new(|x, t| x * t));
        let g = p.grid(8).unwrap();
        let a = a_matrix(&p, g, 0.1).unwrap();
        assert!(a.iter().all(|&v| v == 0.0));
        let sys = assemble(&p, g, 0.1).unwrap();
        let u0 = ScalarField1D::from_fn(g, &*p.initial).unwrap();
        let u1 = sys.cn_step(&u0, 0.3, &p).unwrap();
        for i in 1..8 {
            let x = g.node(i);
            let want = u0.values()[i] + 0.1 * x * 0.35;
            assert!((u1.values()[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn classical_limit_is_heat_stencil() {
        let mut p = Problem1D::zero(ord(2.0 - 1e-9));
        p.d_plus = Arc::new(|_| 1.0);
        let n = 10;
        let g = p.grid(n).unwrap();
        let dt = 0.01;
        let a = a_matrix(&p, g, dt).unwrap();
        let r = dt / (g.spacing() * g.spacing());
        for i in 2..n - 1 {
            for k in 0..=n {
                let want = match k as i64 - i as i64 {
                    -1 | 1 => 0.5 * r,
                    0 => -r,
                    _ => 0.0,
                };
                assert!((a[(i, k)] - want).abs() < 1e-6 * r, "({i},{k}) {} vs {want}", a[(i, k)]);
            }
        }
    }

    #[test]
    fn xi_scaling_matches_definition() {
        // d₊ = Γ(3-α) x^α at x = 0.5, α = 1.5; A_{i,i+1} = ξ_i p_{i,i+1} + η_i q_{i,i+1} + γ_i.
        let alpha = 1.5;
        let mut p = Problem1D::zero(ord(alpha));
        p.d_plus = Arc::new(move |x: f64| gamma(3.0 - alpha) * x.powf(alpha));
        let n = 20;
        let g = p.grid(n).unwrap();
        let dt = 0.05;
        let a = a_matrix(&p, g, dt).unwrap();
        let dx = g.spacing();
        let xi = dt * gamma(1.5) * 0.5f64.powf(1.5) / (2.0 * gamma(2.5) * dx.powf(1.5));
        assert!((a[(10, 11)] - xi).abs() < 1e-12 * xi);
    }

    #[test]
    fn convection_enters_with_positive_upper_entry() {
        let mut p = Problem1D::zero(ord(1.5));
        p.convection = Arc::new(|_| 2.0);
        let g = p.grid(10).unwrap();
        let dt = 0.1;
        let a = a_matrix(&p, g, dt).unwrap();
        let gamma_i = dt * 2.0 / (4.0 * g.spacing());
        assert!((a[(4, 5)] - gamma_i).abs() < 1e-14);
        assert!((a[(4, 3)] + gamma_i).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let p = Problem1D::zero(ord(1.5));
        assert!(assemble(&p, p.grid(2).unwrap(), 0.1).is_err());
        assert!(assemble(&p, p.grid(8).unwrap(), 0.0).is_err());
        let mut q = Problem1D::zero(ord(1.5));
        q.d_minus = Arc::new(|_| -1.0);
        assert!(matches!(assemble(&q, q.grid(8).unwrap(), 0.1), Err(FracError::InvalidArgument(_))));
    }

    #[test]
    fn step_count_adjustment() {
        assert_eq!(time_steps(1.0, 0.01).unwrap(), (100, 0.01, false));
        let (n, dt, adj) = time_steps(1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert!(adj);
        assert!((dt - 0.25).abs() < 1e-15);
        assert!(time_steps(1.0, -0.1).is_err());
    }
}
