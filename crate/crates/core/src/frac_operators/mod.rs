//! Spline approximations of the Riemann–Liouville derivatives and the
//! independent oracles used to check them.
//!
//! The spline operators are row contractions against [`OperatorRows`]; the
//! oracles are Grünwald–Letnikov sums, closed-form power laws, and a
//! singular-weight quadrature of the derivative-transfer identity.

mod quadrature;

use std::fmt;
use std::sync::Arc;

pub use quadrature::{
    rl_quadrature_left, rl_quadrature_left_with, rl_quadrature_right, rl_quadrature_right_with,
    QuadratureSettings,
};

use crate::error::{FracError, Result};
use crate::frac_coeffs::{FractionalOrder, OperatorRows};
use crate::grid::ScalarField1D;
use crate::special::{gamma, is_gamma_pole};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth function together with its first two derivatives.
#[derive(Clone)]
pub struct AnalyticFunction1D {
    pub f: RealFn,
    pub f1: RealFn,
    pub f2: RealFn,
}

impl fmt::Debug for AnalyticFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticFunction1D { .. }")
    }
}

impl AnalyticFunction1D {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            f1: Arc::new(f1),
            f2: Arc::new(f2),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0, |_| 0.0)
    }

    /// Checks `f1` and `f2` against central differences of `f` (step `1e-5`,
    /// tolerance `1e-6` absolute, relaxed proportionally to `|f2|`).
    pub fn check_derivatives(&self, points: impl IntoIterator<Item = f64>) -> Result<()> {
        const H: f64 = 1e-5;
        for x in points {
            let (fm, f0, fp) = ((self.f)(x - H), (self.f)(x), (self.f)(x + H));
            let d1 = (fp - fm) / (2.0 * H);
            let d2 = (fp - 2.0 * f0 + fm) / (H * H);
            let e1 = (d1 - (self.f1)(x)).abs();
            // Second differences lose ~eps/h^2 ≈ 1e-6 to rounding alone.
            let e2 = (d2 - (self.f2)(x)).abs();
            let scale = 1.0 + (self.f2)(x).abs().max((self.f1)(x).abs());
            if e1 > 1e-6 * scale || e2 > 1e-3 * scale {
                return Err(FracError::arg(format!(
                    "derivative callbacks inconsistent at x = {x}: |Δf'| = {e1:e}, |Δf''| = {e2:e}"
                )));
            }
        }
        Ok(())
    }
}

/// `1 / (Γ(4-α) Δx^α)`.
#[inline]
pub fn spline_scale(order: FractionalOrder, spacing: f64) -> f64 {
    let a = order.value();
    1.0 / (gamma(4.0 - a) * spacing.powf(a))
}

fn check_field(u: &ScalarField1D, rows: &OperatorRows) -> Result<()> {
    let n = u.grid().n_cells();
    if n < 2 {
        return Err(FracError::arg("spline operators need at least 2 cells"));
    }
    if rows.n_cells() != n {
        return Err(FracError::arg("coefficient table does not match the grid"));
    }
    Ok(())
}

/// Left spline approximation of `_{x_L}D_x^α u` at nodes `1..N`.
pub fn apply_left_spline(u: &ScalarField1D, order: FractionalOrder) -> Result<Vec<f64>> {
    let n = u.grid().n_cells();
    if n < 2 {
        return Err(FracError::arg("spline operators need at least 2 cells"));
    }
    let rows = OperatorRows::shared(order, n)?;
    apply_left_with(u, &rows)
}

/// Right spline approximation of `_x D_{x_R}^α u` at nodes `1..N`.
pub fn apply_right_spline(u: &ScalarField1D, order: FractionalOrder) -> Result<Vec<f64>> {
    let n = u.grid().n_cells();
    if n < 2 {
        return Err(FracError::arg("spline operators need at least 2 cells"));
    }
    let rows = OperatorRows::shared(order, n)?;
    apply_right_with(u, &rows)
}

/// [`apply_left_spline`] against an explicit table.
pub fn apply_left_with(u: &ScalarField1D, rows: &OperatorRows) -> Result<Vec<f64>> {
    check_field(u, rows)?;
    let scale = spline_scale(rows.order(), u.grid().spacing());
    let v = u.values();
    Ok((1..rows.n_cells())
        .map(|i| scale * dot(rows.left(i), &v[..i + 2]))
        .collect())
}

/// [`apply_right_spline`] against an explicit table.
pub fn apply_right_with(u: &ScalarField1D, rows: &OperatorRows) -> Result<Vec<f64>> {
    check_field(u, rows)?;
    let scale = spline_scale(rows.order(), u.grid().spacing());
    let v = u.values();
    Ok((1..rows.n_cells())
        .map(|i| scale * dot(rows.right(i), &v[i - 1..]))
        .collect())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value at `x` of the piecewise-linear (hat-function) interpolant of `u`.
pub fn spline_interpolant(u: &ScalarField1D, x: f64) -> f64 {
    let g = u.grid();
    let v = u.values();
    let s = ((x - g.x_left()) / g.spacing()).clamp(0.0, g.n_cells() as f64);
    let k = (s.floor() as usize).min(g.n_cells() - 1);
    let theta = s - k as f64;
    (1.0 - theta) * v[k] + theta * v[k + 1]
}

/// Grünwald weights `(-1)^i C(α, i)` for `i = 0..=m`.
pub fn gl_weights(order: FractionalOrder, m: usize) -> Vec<f64> {
    let a = order.value();
    let mut w = Vec::with_capacity(m + 1);
    w.push(1.0);
    for i in 1..=m {
        let prev = w[i - 1];
        w.push(prev * (i as f64 - 1.0 - a) / i as f64);
    }
    w
}

fn gl_steps(distance: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && distance > 0.0) {
        return Err(FracError::arg("Grünwald sum needs h > 0 and x strictly inside the domain"));
    }
    let m = distance / h;
    let rounded = m.round();
    if rounded < 1.0 || (m - rounded).abs() > 1e-9 * m.max(1.0) {
        return Err(FracError::arg(format!(
            "(x - endpoint)/h = {m} is not a positive integer"
        )));
    }
    Ok(rounded as usize)
}

/// First-order Grünwald–Letnikov sum for the left derivative.
pub fn gl_left(
    f: impl Fn(f64) -> f64,
    x: f64,
    h: f64,
    order: FractionalOrder,
    x_left: f64,
) -> Result<f64> {
    let m = gl_steps(x - x_left, h)?;
    let w = gl_weights(order, m);
    let sum: f64 = w.iter().enumerate().map(|(i, wi)| wi * f(x - i as f64 * h)).sum();
    Ok(sum / h.powf(order.value()))
}

/// First-order Grünwald–Letnikov sum for the right derivative.
pub fn gl_right(
    f: impl Fn(f64) -> f64,
    x: f64,
    h: f64,
    order: FractionalOrder,
    x_right: f64,
) -> Result<f64> {
    let m = gl_steps(x_right - x, h)?;
    let w = gl_weights(order, m);
    let sum: f64 = w.iter().enumerate().map(|(i, wi)| wi * f(x + i as f64 * h)).sum();
    Ok(sum / h.powf(order.value()))
}

fn power_law(p: f64, order: FractionalOrder, distance: f64) -> Result<f64> {
    if !(p > -1.0) {
        return Err(FracError::arg(format!("power-law exponent must exceed -1, got {p}")));
    }
    if !(distance > 0.0) {
        return Err(FracError::arg("power-law derivative needs x strictly inside the domain"));
    }
    let a = order.value();
    if is_gamma_pole(p + 1.0 - a) {
        return Err(FracError::arg(format!(
            "Γ(p + 1 - α) has a pole for p = {p}, α = {a}"
        )));
    }
    Ok(gamma(p + 1.0) / gamma(p + 1.0 - a) * distance.powf(p - a))
}

/// Exact `_{x_L}D_x^α (x - x_L)^p`.
pub fn rl_power_left(p: f64, order: FractionalOrder, x: f64, x_left: f64) -> Result<f64> {
    power_law(p, order, x - x_left)
}

/// Exact `_x D_{x_R}^α (x_R - x)^p`.
pub fn rl_power_right(p: f64, order: FractionalOrder, x: f64, x_right: f64) -> Result<f64> {
    power_law(p, order, x_right - x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid1D;
    use approx::assert_relative_eq;

    fn ord(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = UniformGrid1D::new(0.0, 1.0, 10).unwrap();
        let u = ScalarField1D::zeros(g);
        assert!(apply_left_spline(&u, ord(1.5)).unwrap().iter().all(|&v| v == 0.0));
        assert!(apply_right_spline(&u, ord(1.5)).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_small_grid_is_rejected() {
        let g = UniformGrid1D::new(0.0, 1.0, 1).unwrap();
        let u = ScalarField1D::zeros(g);
        assert!(apply_left_spline(&u, ord(1.5)).is_err());
    }

    #[test]
    fn left_spline_of_square() {
        // _0 D_x^{1.5} x^2 = 2 x^{0.5} / Γ(1.5); at x = 0.5 this is 1.595769...
        let want = 2.0 * 0.5f64.sqrt() / gamma(1.5);
        assert_relative_eq!(want, 1.595_769_121_605_731, epsilon = 1e-12);
        let g = UniformGrid1D::new(0.0, 1.0, 200).unwrap();
        let u = ScalarField1D::from_fn(g, |x| x * x).unwrap();
        let d = apply_left_spline(&u, ord(1.5)).unwrap();
        assert!((d[99] - want).abs() <= 1e-3, "{}", d[99]);
    }

    #[test]
    fn right_is_reflected_left() {
        let g = UniformGrid1D::new(-0.3, 1.7, 37).unwrap();
        let f = |x: f64| (3.0 * x).sin() + x * x * x;
        let u = ScalarField1D::from_fn(g, f).unwrap();
        let refl = ScalarField1D::from_fn(g, |x| f(g.x_left() + g.x_right() - x)).unwrap();
        let r = apply_right_spline(&u, ord(1.35)).unwrap();
        let mut l = apply_left_spline(&refl, ord(1.35)).unwrap();
        l.reverse();
        for (a, b) in r.iter().zip(&l) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn gl_weights_recurrence() {
        let w = gl_weights(ord(1.5), 4);
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], -1.5);
        // C(1.5, 2) = 1.5 * 0.5 / 2
        assert_relative_eq!(w[2], 0.375, epsilon = 1e-15);
    }

    #[test]
    fn gl_left_of_square() {
        assert_eq!(gl_left(|_| 0.0, 0.5, 1e-3, ord(1.5), 0.0).unwrap(), 0.0);
        let v = gl_left(|x| x * x, 0.5, 1e-4, ord(1.5), 0.0).unwrap();
        assert!((v - 1.5958).abs() < 2e-3, "{v}");
        assert!(gl_left(|x| x, 0.5, 0.3, ord(1.5), 0.0).is_err());
    }

    #[test]
    fn gl_right_mirrors_left() {
        let l = gl_left(|x| x * x * x, 0.6, 1e-3, ord(1.3), 0.0).unwrap();
        let r = gl_right(|x| (1.0 - x).powi(3), 0.4, 1e-3, ord(1.3), 1.0).unwrap();
        assert_relative_eq!(l, r, max_relative = 1e-10);
    }

    #[test]
    fn power_law_values() {
        let v = rl_power_left(2.0, ord(1.5), 1.0, 0.0).unwrap();
        assert_relative_eq!(v, 2.256_758_334_191_025, epsilon = 1e-12);
        let v = rl_power_left(3.0, ord(1.2), 0.5, 0.0).unwrap();
        assert_relative_eq!(v, 6.0 / 1.676_490_787_764_436_4 * 0.5f64.powf(1.8), max_relative = 1e-12);
        // classical limit: d^2/dx^2 x^2 = 2
        let v = rl_power_left(2.0, ord(2.0 - 1e-12), 0.7, 0.0).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-9);
        assert!(rl_power_left(0.5, ord(1.5), 0.5, 0.0).is_err());
        assert!(rl_power_left(-1.5, ord(1.5), 0.5, 0.0).is_err());
        let r = rl_power_right(2.0, ord(1.5), 0.0, 1.0).unwrap();
        assert_relative_eq!(r, 2.256_758_334_191_025, epsilon = 1e-12);
    }

    #[test]
    fn interpolant_matches_nodes_and_midpoints() {
        let g = UniformGrid1D::new(0.0, 2.0, 4).unwrap();
        let u = ScalarField1D::from_fn(g, |x| x * x).unwrap();
        assert_eq!(spline_interpolant(&u, 1.0), 1.0);
        assert_relative_eq!(spline_interpolant(&u, 0.75), 0.5 * (0.25 + 1.0), epsilon = 1e-15);
        assert_eq!(spline_interpolant(&u, 2.0), 4.0);
    }

    #[test]
    fn derivative_check_catches_wrong_callback() {
        let good = AnalyticFunction1D::new(|x| x.sin(), |x| x.cos(), |x| -x.sin());
        assert!(good.check_derivatives([0.1, 0.5, 0.9]).is_ok());
        let bad = AnalyticFunction1D::new(|x| x.sin(), |x| x.cos(), |x| x.sin());
        assert!(bad.check_derivatives([0.5]).is_err());
    }
}
