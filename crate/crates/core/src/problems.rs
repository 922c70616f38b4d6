//! Benchmark problem registry and manufactured-solution forcing.
//!
//! Every evolution problem has an exact solution of the form `e^{-t} X(x)`
//! or `e^{-t} X(x) Y(y)`. The forcing is assembled from 1D oracle values of
//! the fractional derivatives of `X` and `Y` on grid nodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adi2d::{Fn3, Problem2D, Source2D, SpatialForcing2D};
use crate::error::{FracError, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::frac_coeffs::{FractionalOrder, Side};
use crate::frac_operators::{
    rl_power_left, rl_power_right, rl_quadrature_left, rl_quadrature_right, AnalyticFunction1D,
};
use crate::grid::UniformGrid1D;
use crate::solver1d::{Fn1, Problem1D, Source1D, SpatialForcing1D};
use crate::special::gamma;

pub const DEFAULT_ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Spline operator against the quadrature oracle at interior nodes.
    OperatorTest,
    Evolution1D,
    Evolution2D,
}

/// One column of a published convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceColumn {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<Option<f64>>,
}

/// Published errors for `h = 1/denominator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub denominators: Vec<usize>,
    pub columns: Vec<ReferenceColumn>,
}

impl ReferenceTable {
    pub fn column(&self, alpha: f64, beta: Option<f64>) -> Option<&ReferenceColumn> {
        self.columns.iter().find(|c| {
            (c.alpha - alpha).abs() < 1e-12
                && match (c.beta, beta) {
                    (Some(a), Some(b)) => (a - b).abs() < 1e-12,
                    (None, None) => true,
                    _ => false,
                }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub id: String,
    pub description: String,
    pub kind: ProblemKind,
    pub reference: Option<ReferenceTable>,
}

impl RegistryEntry {
    pub fn dimension(&self) -> usize {
        match self.kind {
            ProblemKind::Evolution2D => 2,
            _ => 1,
        }
    }
}

fn col(alpha: f64, beta: Option<f64>, errors: [f64; 4], orders: [f64; 3]) -> ReferenceColumn {
    ReferenceColumn {
        alpha,
        beta,
        errors: errors.to_vec(),
        orders: std::iter::once(None).chain(orders.map(Some)).collect(),
    }
}

fn operator_table() -> ReferenceTable {
    ReferenceTable {
        denominators: vec![50, 100, 200, 400],
        columns: vec![
            col(1.1, None, [1.0303e-2, 2.7832e-3, 7.2217e-4, 1.8379e-4], [1.8882, 1.9464, 1.9743]),
            col(1.5, None, [2.4122e-2, 6.4914e-3, 1.6846e-3, 4.2937e-4], [1.8937, 1.9461, 1.9721]),
            col(1.9, None, [3.8358e-2, 1.0322e-2, 2.7038e-3, 6.9889e-4], [1.8938, 1.9327, 1.9518]),
        ],
    }
}

pub fn registry() -> Vec<RegistryEntry> {
    let e = |id: &str, description: &str, kind, reference| RegistryEntry {
        id: id.to_string(),
        description: description.to_string(),
        kind,
        reference,
    };
    vec![
        e(
            "table1",
            "right spline operator on u = sin((1-x)^4), (0,1)",
            ProblemKind::OperatorTest,
            Some(operator_table()),
        ),
        e(
            "table2",
            "left spline operator on u = sin(x^4), (0,1)",
            ProblemKind::OperatorTest,
            Some(operator_table()),
        ),
        e(
            "cd1d",
            "1D two-sided convection-diffusion, u = e^-t sin((2x)^4) sin((2-2x)^4)",
            ProblemKind::Evolution1D,
            Some(ReferenceTable {
                denominators: vec![50, 100, 200, 400],
                columns: vec![
                    col(1.1, None, [2.1180e-3, 5.2688e-4, 1.3174e-4, 3.2913e-5], [2.0072, 1.9997, 2.0010]),
                    col(1.5, None, [1.9815e-3, 5.0092e-4, 1.2649e-4, 3.1851e-5], [1.9839, 1.9856, 1.9896]),
                    col(1.9, None, [1.3809e-3, 3.5593e-4, 9.1681e-5, 2.3523e-5], [1.9559, 1.9569, 1.9625]),
                ],
            }),
        ),
        e(
            "powerlaw-1d",
            "1D two-sided convection-diffusion, u = e^-t x^3 (1-x)^3, closed-form forcing",
            ProblemKind::Evolution1D,
            None,
        ),
        e(
            "cd2d-twosided",
            "2D two-sided convection-diffusion, u = e^-t X(x) X(y), X(z) = sin((2z)^4) sin((2-2z)^4)",
            ProblemKind::Evolution2D,
            Some(ReferenceTable {
                denominators: vec![25, 50, 100, 200],
                columns: vec![
                    col(1.1, Some(1.1), [9.5946e-3, 2.3956e-3, 5.9582e-4, 1.4915e-4], [2.0018, 2.0075, 1.9981]),
                    col(1.6, Some(1.4), [8.5313e-3, 2.1729e-3, 5.5244e-4, 1.3959e-4], [1.9731, 1.9757, 1.9847]),
                    col(1.9, Some(1.9), [1.0232e-2, 2.6207e-3, 6.6155e-4, 1.6796e-4], [1.9650, 1.9860, 1.9778]),
                ],
            }),
        ),
        e(
            "cd2d-onesided",
            "2D one-sided convection-diffusion, u = e^-t sin(x^4) sin(y^4)",
            ProblemKind::Evolution2D,
            Some(ReferenceTable {
                denominators: vec![25, 50, 100, 200],
                columns: vec![
                    col(1.1, Some(1.1), [1.1435e-3, 2.8953e-4, 6.8091e-5, 1.5950e-5], [1.9817, 2.0882, 2.0939]),
                    col(1.6, Some(1.4), [5.0896e-4, 1.3592e-4, 3.4877e-5, 8.8502e-6], [1.9048, 1.9624, 1.9785]),
                    col(1.9, Some(1.9), [2.6381e-4, 6.9390e-5, 1.8064e-5, 4.6728e-6], [1.9267, 1.9416, 1.9507]),
                ],
            }),
        ),
    ]
}

pub fn lookup(id: &str) -> Result<RegistryEntry> {
    registry().into_iter().find(|e| e.id == id).ok_or_else(|| {
        let ids: Vec<String> = registry().into_iter().map(|e| e.id).collect();
        FracError::arg(format!("unknown problem '{id}' (known: {})", ids.join(", ")))
    })
}

fn kind_of(id: &str, want: ProblemKind) -> Result<()> {
    let e = lookup(id)?;
    if e.kind != want {
        return Err(FracError::arg(format!("problem '{id}' is {:?}, not {want:?}", e.kind)));
    }
    Ok(())
}

// Manufactured profiles.

/// `sin((2x)^4) sin((2-2x)^4)`.
pub fn double_bump() -> AnalyticFunction1D {
    fn parts(x: f64) -> [f64; 6] {
        let w = 1.0 - x;
        let (sa, ca) = (16.0 * x.powi(4)).sin_cos();
        let (sb, cb) = (16.0 * w.powi(4)).sin_cos();
        let a1 = 64.0 * x.powi(3) * ca;
        let a2 = 192.0 * x * x * ca - 4096.0 * x.powi(6) * sa;
        let b1 = -64.0 * w.powi(3) * cb;
        let b2 = 192.0 * w * w * cb - 4096.0 * w.powi(6) * sb;
        [sa, a1, a2, sb, b1, b2]
    }
    AnalyticFunction1D::new(
        |x| {
            let [a, _, _, b, _, _] = parts(x);
            a * b
        },
        |x| {
            let [a, a1, _, b, b1, _] = parts(x);
            a1 * b + a * b1
        },
        |x| {
            let [a, a1, a2, b, b1, b2] = parts(x);
            a2 * b + 2.0 * a1 * b1 + a * b2
        },
    )
}

/// `sin(x^4)`.
pub fn sin_quartic() -> AnalyticFunction1D {
    AnalyticFunction1D::new(
        |x| x.powi(4).sin(),
        |x| 4.0 * x.powi(3) * x.powi(4).cos(),
        |x| {
            let (s, c) = x.powi(4).sin_cos();
            12.0 * x * x * c - 16.0 * x.powi(6) * s
        },
    )
}

/// `sin((1-x)^4)`.
pub fn sin_quartic_reflected() -> AnalyticFunction1D {
    AnalyticFunction1D::new(
        |x| (1.0 - x).powi(4).sin(),
        |x| -4.0 * (1.0 - x).powi(3) * (1.0 - x).powi(4).cos(),
        |x| {
            let w = 1.0 - x;
            let (s, c) = w.powi(4).sin_cos();
            12.0 * w * w * c - 16.0 * w.powi(6) * s
        },
    )
}

const POWERLAW: [(f64, f64); 4] = [(3.0, 1.0), (4.0, -3.0), (5.0, 3.0), (6.0, -1.0)];

/// `x^3 (1-x)^3`.
pub fn power_bump() -> AnalyticFunction1D {
    AnalyticFunction1D::new(
        |x| (x * (1.0 - x)).powi(3),
        |x| 3.0 * x * x - 12.0 * x.powi(3) + 15.0 * x.powi(4) - 6.0 * x.powi(5),
        |x| 6.0 * x - 36.0 * x * x + 60.0 * x.powi(3) - 30.0 * x.powi(4),
    )
}

fn validate(u: &AnalyticFunction1D, lo: f64, hi: f64) -> Result<()> {
    u.check_derivatives((1..16).map(|k| lo + (hi - lo) * k as f64 / 16.0))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(FracError::arg(format!("oracle tolerance must be positive, got {tol}")))
    }
}

/// The profile and derivative tested by an operator-test entry.
pub fn operator_test_function(id: &str) -> Result<(Side, AnalyticFunction1D)> {
    kind_of(id, ProblemKind::OperatorTest)?;
    let (side, u) = match id {
        "table1" => (Side::Right, sin_quartic_reflected()),
        "table2" => (Side::Left, sin_quartic()),
        _ => unreachable!("operator-test ids are covered"),
    };
    validate(&u, 0.0, 1.0)?;
    Ok((side, u))
}

/// Oracle value of the one-sided derivative of `u` at `x` on `[x_left, x_right]`.
pub fn oracle_derivative(
    u: &AnalyticFunction1D,
    side: Side,
    order: FractionalOrder,
    x: f64,
    x_left: f64,
    x_right: f64,
    tol: f64,
) -> Result<f64> {
    match side {
        Side::Left => rl_quadrature_left(u, order, x, x_left, tol),
        Side::Right => rl_quadrature_right(u, order, x, x_right, tol),
    }
}

/// Oracle values at interior nodes `1..N`, in node order.
pub fn oracle_on_grid(
    u: &AnalyticFunction1D,
    side: Side,
    order: FractionalOrder,
    grid: &UniformGrid1D,
    tol: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let (lo, hi) = (grid.x_left(), grid.x_right());
    try_map_indexed(exec, 1, grid.n_cells(), |i| {
        oracle_derivative(u, side, order, grid.node(i), lo, hi, tol)
    })
}

// 1D forcing.

/// `S(x)` with `s = e^{-t} S` for `u = e^{-t} X(x)`:
/// `S = -X - d₊ D_L^α X - d₋ D_R^α X - g X'`. Boundary nodes get 0.
pub struct ManufacturedForcing1D {
    pub profile: AnalyticFunction1D,
    pub order: FractionalOrder,
    pub d_plus: Fn1,
    pub d_minus: Fn1,
    pub convection: Fn1,
    pub oracle_tol: f64,
}

impl SpatialForcing1D for ManufacturedForcing1D {
    fn sample(&self, grid: &UniformGrid1D, exec: Execution) -> Result<Vec<f64>> {
        let n = grid.n_cells();
        let (lo, hi) = (grid.x_left(), grid.x_right());
        let interior = try_map_indexed(exec, 1, n, |i| {
            let x = grid.node(i);
            let u = &self.profile;
            let (dp, dm) = ((self.d_plus)(x), (self.d_minus)(x));
            let mut s = -(u.f)(x) - (self.convection)(x) * (u.f1)(x);
            if dp != 0.0 {
                s -= dp * rl_quadrature_left(u, self.order, x, lo, self.oracle_tol)?;
            }
            if dm != 0.0 {
                s -= dm * rl_quadrature_right(u, self.order, x, hi, self.oracle_tol)?;
            }
            Ok(s)
        })?;
        let mut out = Vec::with_capacity(n + 1);
        out.push(0.0);
        out.extend(interior);
        out.push(0.0);
        Ok(out)
    }
}

/// Closed-form counterpart of [`ManufacturedForcing1D`] for `X = x^3 (1-x)^3`
/// on `[0, 1]`, built from power-law derivatives.
pub struct PowerLawForcing1D {
    pub order: FractionalOrder,
    pub d_plus: Fn1,
    pub d_minus: Fn1,
    pub convection: Fn1,
}

impl PowerLawForcing1D {
    pub fn left_derivative(order: FractionalOrder, x: f64) -> Result<f64> {
        POWERLAW
            .iter()
            .map(|&(p, c)| rl_power_left(p, order, x, 0.0).map(|v| c * v))
            .sum()
    }

    /// `X(x) = X(1-x)`, so the right derivative is the mirrored power sum.
    pub fn right_derivative(order: FractionalOrder, x: f64) -> Result<f64> {
        POWERLAW
            .iter()
            .map(|&(p, c)| rl_power_right(p, order, x, 1.0).map(|v| c * v))
            .sum()
    }
}

impl SpatialForcing1D for PowerLawForcing1D {
    fn sample(&self, grid: &UniformGrid1D, _exec: Execution) -> Result<Vec<f64>> {
        if grid.x_left() != 0.0 || grid.x_right() != 1.0 {
            return Err(FracError::arg("power-law forcing is defined on [0, 1]"));
        }
        let u = power_bump();
        let n = grid.n_cells();
        let mut out = vec![0.0; n + 1];
        for (i, o) in out.iter_mut().enumerate().take(n).skip(1) {
            let x = grid.node(i);
            *o = -(u.f)(x)
                - (self.d_plus)(x) * Self::left_derivative(self.order, x)?
                - (self.d_minus)(x) * Self::right_derivative(self.order, x)?
                - (self.convection)(x) * (u.f1)(x);
        }
        Ok(out)
    }
}

struct Coefficients1D {
    d_plus: Fn1,
    d_minus: Fn1,
    convection: Fn1,
}

fn variable_coefficients(order: FractionalOrder) -> Coefficients1D {
    let a = order.value();
    let c = gamma(3.0 - a);
    Coefficients1D {
        d_plus: Arc::new(move |x: f64| c * x.powf(a)),
        d_minus: Arc::new(move |x: f64| c * (2.0 - x).powf(a)),
        convection: Arc::new(|x| 0.25 * x),
    }
}

fn separable_1d(
    order: FractionalOrder,
    profile: AnalyticFunction1D,
    coeffs: Coefficients1D,
    source: Source1D,
) -> Problem1D {
    let (fi, fl, fr) = (profile.f.clone(), profile.f.clone(), profile.f.clone());
    Problem1D {
        x_left: 0.0,
        x_right: 1.0,
        order,
        t_final: 1.0,
        d_plus: coeffs.d_plus,
        d_minus: coeffs.d_minus,
        convection: coeffs.convection,
        source,
        initial: Arc::new(move |x| fi(x)),
        boundary_left: Arc::new(move |t| (-t).exp() * fl(0.0)),
        boundary_right: Arc::new(move |t| (-t).exp() * fr(1.0)),
        exact: Some(Arc::new(move |x, t| (-t).exp() * (profile.f)(x))),
    }
}

fn exp_decay() -> Fn1 {
    Arc::new(|t: f64| (-t).exp())
}

/// Oracle-built forcing for a 1D evolution entry.
pub fn manufactured_forcing_1d(id: &str, order: FractionalOrder, oracle_tol: f64) -> Result<ManufacturedForcing1D> {
    kind_of(id, ProblemKind::Evolution1D)?;
    check_tol(oracle_tol)?;
    let profile = match id {
        "cd1d" => double_bump(),
        "powerlaw-1d" => power_bump(),
        _ => unreachable!("1D ids are covered"),
    };
    validate(&profile, 0.0, 1.0)?;
    let c = variable_coefficients(order);
    Ok(ManufacturedForcing1D {
        profile,
        order,
        d_plus: c.d_plus,
        d_minus: c.d_minus,
        convection: c.convection,
        oracle_tol,
    })
}

/// Builds a 1D evolution problem from the registry.
pub fn problem1d(id: &str, order: FractionalOrder, oracle_tol: f64) -> Result<Problem1D> {
    let forcing = manufactured_forcing_1d(id, order, oracle_tol)?;
    let profile = forcing.profile.clone();
    let spatial: Arc<dyn SpatialForcing1D> = match id {
        "powerlaw-1d" => {
            let c = variable_coefficients(order);
            Arc::new(PowerLawForcing1D {
                order,
                d_plus: c.d_plus,
                d_minus: c.d_minus,
                convection: c.convection,
            })
        }
        _ => Arc::new(forcing),
    };
    let source = Source1D::Separable {
        spatial,
        temporal: exp_decay(),
    };
    Ok(separable_1d(order, profile, variable_coefficients(order), source))
}

// 2D forcing.

/// `S(x, y)` with `s = e^{-t} S` for `u = e^{-t} X(x) Y(y)`.
pub struct ManufacturedForcing2D {
    pub x_profile: AnalyticFunction1D,
    pub y_profile: AnalyticFunction1D,
    pub alpha: FractionalOrder,
    pub beta: FractionalOrder,
    pub problem: Problem2D,
    pub oracle_tol: f64,
}

struct AxisData {
    f: Vec<f64>,
    f1: Vec<f64>,
    left: Option<Vec<f64>>,
    right: Option<Vec<f64>>,
}

fn axis_data(
    u: &AnalyticFunction1D,
    order: FractionalOrder,
    grid: &UniformGrid1D,
    need_left: bool,
    need_right: bool,
    tol: f64,
    exec: Execution,
) -> Result<AxisData> {
    let pad = |v: Vec<f64>| {
        let mut out = vec![0.0];
        out.extend(v);
        out.push(0.0);
        out
    };
    let oracle = |side, need: bool| -> Result<Option<Vec<f64>>> {
        if need {
            Ok(Some(pad(oracle_on_grid(u, side, order, grid, tol, exec)?)))
        } else {
            Ok(None)
        }
    };
    Ok(AxisData {
        f: grid.sample(&*u.f),
        f1: grid.sample(&*u.f1),
        left: oracle(Side::Left, need_left)?,
        right: oracle(Side::Right, need_right)?,
    })
}

impl SpatialForcing2D for ManufacturedForcing2D {
    fn sample(&self, gx: &UniformGrid1D, gy: &UniformGrid1D, exec: Execution) -> Result<Vec<f64>> {
        let (nx, ny) = (gx.n_cells(), gy.n_cells());
        let p = &self.problem;
        let any = |f: &crate::adi2d::Fn2| {
            (1..ny).any(|j| (1..nx).any(|i| f(gx.node(i), gy.node(j)) != 0.0))
        };
        let xd = axis_data(&self.x_profile, self.alpha, gx, any(&p.d_plus), any(&p.d_minus), self.oracle_tol, exec)?;
        let yd = axis_data(&self.y_profile, self.beta, gy, any(&p.e_plus), any(&p.e_minus), self.oracle_tol, exec)?;
        let mut out = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 1..ny {
            let y = gy.node(j);
            for i in 1..nx {
                let x = gx.node(i);
                let (xf, yf) = (xd.f[i], yd.f[j]);
                let mut s = -xf * yf - (p.g)(x, y) * xd.f1[i] * yf - (p.h)(x, y) * xf * yd.f1[j];
                if let Some(v) = &xd.left {
                    s -= (p.d_plus)(x, y) * v[i] * yf;
                }
                if let Some(v) = &xd.right {
                    s -= (p.d_minus)(x, y) * v[i] * yf;
                }
                if let Some(v) = &yd.left {
                    s -= (p.e_plus)(x, y) * xf * v[j];
                }
                if let Some(v) = &yd.right {
                    s -= (p.e_minus)(x, y) * xf * v[j];
                }
                out[j * (nx + 1) + i] = s;
            }
        }
        Ok(out)
    }
}

/// Builds a 2D evolution problem from the registry; the initial condition
/// is the exact solution at `t = 0`.
pub fn problem2d(id: &str, alpha: FractionalOrder, beta: FractionalOrder, oracle_tol: f64) -> Result<Problem2D> {
    kind_of(id, ProblemKind::Evolution2D)?;
    check_tol(oracle_tol)?;
    let mut p = Problem2D::zero(alpha, beta);
    let (xp, yp) = match id {
        "cd2d-twosided" => {
            let (a, b) = (alpha.value(), beta.value());
            let (ca, cb) = (gamma(3.0 - a), gamma(3.0 - b));
            p.d_plus = Arc::new(move |x, _| ca * x.powf(a));
            p.d_minus = Arc::new(move |x, _| ca * (2.0 - x).powf(a));
            p.e_plus = Arc::new(move |_, y| cb * y.powf(b));
            p.e_minus = Arc::new(move |_, y| cb * (2.0 - y).powf(b));
            p.g = Arc::new(|x, _| 0.25 * x);
            p.h = Arc::new(|_, y| 0.25 * y);
            (double_bump(), double_bump())
        }
        "cd2d-onesided" => {
            p.d_plus = Arc::new(|_, _| 1.0);
            p.e_plus = Arc::new(|_, _| 1.0);
            p.g = Arc::new(|_, _| 1.0);
            p.h = Arc::new(|_, _| 1.0);
            (sin_quartic(), sin_quartic())
        }
        _ => unreachable!("2D ids are covered"),
    };
    validate(&xp, 0.0, 1.0)?;
    validate(&yp, 0.0, 1.0)?;
    let (fx, fy) = (xp.f.clone(), yp.f.clone());
    let exact: Fn3 = Arc::new(move |x, y, t| (-t).exp() * fx(x) * fy(y));
    let (e0, e1) = (exact.clone(), exact.clone());
    p.initial = Arc::new(move |x, y| e0(x, y, 0.0));
    p.boundary = e1;
    p.exact = Some(exact);
    let spatial = ManufacturedForcing2D {
        x_profile: xp,
        y_profile: yp,
        alpha,
        beta,
        problem: p.clone(),
        oracle_tol,
    };
    p.source = Source2D::Separable {
        spatial: Arc::new(spatial),
        temporal: exp_decay(),
    };
    Ok(p)
}
