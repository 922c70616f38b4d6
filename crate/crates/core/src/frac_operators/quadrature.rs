//! Quadrature oracle for Riemann–Liouville derivatives of smooth functions.
//!
//! Uses the transfer identity
//!
//! ```text
//! _{x_L}D_x^α u(x) = 1/Γ(2-α) ∫_{x_L}^x (x-ξ)^{1-α} u''(ξ) dξ
//!                  + u(x_L) (x-x_L)^{-α} / Γ(1-α)
//!                  + u'(x_L) (x-x_L)^{1-α} / Γ(2-α)
//! ```
//!
//! and its mirror for the right derivative. The weakly singular integral is
//! split into uniform panels; the panel touching the singularity uses a
//! Gauss–Jacobi rule with weight `t^{1-α}`, the rest Gauss–Legendre. The
//! panel count doubles until successive estimates agree.

use std::num::NonZeroUsize;

use gauss_quad::{GaussJacobi, GaussLegendre};

use super::AnalyticFunction1D;
use crate::error::{FracError, Result};
use crate::frac_coeffs::FractionalOrder;
use crate::special::gamma;

/// Panel-doubling controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Nodes per panel, for both rules.
    pub degree: usize,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            degree: 20,
            initial_panels: 4,
            max_panels: 1 << 14,
        }
    }
}

struct Rules {
    jacobi: GaussJacobi,
    legendre: GaussLegendre,
}

impl Rules {
    fn new(order: FractionalOrder, degree: usize) -> Self {
        let deg = NonZeroUsize::new(degree.max(2)).expect("degree >= 2");
        let exponent = (1.0 - order.value())
            .try_into()
            .expect("1 - α lies in (-1, 0)");
        Self {
            // Weight (1 + s)^{1-α}: singular at the left end of [-1, 1].
            jacobi: GaussJacobi::new(deg, 0.0.try_into().expect("0 > -1"), exponent),
            legendre: GaussLegendre::new(deg),
        }
    }

    /// `∫_0^len t^{1-α} phi(t) dt` on `panels` uniform panels, together with
    /// the integral of the absolute integrand (rounding scale).
    fn integrate(&self, alpha: f64, len: f64, panels: usize, phi: &dyn Fn(f64) -> f64) -> (f64, f64) {
        let e = 1.0 - alpha;
        let w = len / panels as f64;
        let half = 0.5 * w;

        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        // t = half (1 + s) maps the Jacobi weight onto t^{1-α} up to half^{1-α}.
        let jac_scale = half.powf(e) * half;
        for (s, wt) in self.jacobi.iter() {
            let v = wt * phi(half * (1.0 + s));
            sum += jac_scale * v;
            abs_sum += jac_scale * v.abs();
        }
        for k in 1..panels {
            let a = k as f64 * w;
            let b = if k + 1 == panels { len } else { a + w };
            let mid = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for (s, wt) in self.legendre.iter() {
                let t = mid + h * s;
                let v = h * wt * t.powf(e) * phi(t);
                sum += v;
                abs_sum += v.abs();
            }
        }
        (sum, abs_sum)
    }
}

/// Adaptive estimate of `(1/Γ(2-α)) ∫_0^len t^{1-α} phi(t) dt`.
fn singular_integral(
    order: FractionalOrder,
    len: f64,
    phi: &dyn Fn(f64) -> f64,
    x: f64,
    tol: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let alpha = order.value();
    let norm = 1.0 / gamma(2.0 - alpha);
    let rules = Rules::new(order, settings.degree);
    let mut panels = settings.initial_panels.max(1);
    let (mut prev, _) = rules.integrate(alpha, len, panels, phi);
    prev *= norm;
    let mut change = f64::INFINITY;
    while panels < settings.max_panels {
        panels *= 2;
        let (cur, abs_scale) = rules.integrate(alpha, len, panels, phi);
        let cur = cur * norm;
        change = (cur - prev).abs();
        let rounding = 64.0 * f64::EPSILON * abs_scale * norm.abs();
        if change <= tol || change <= rounding {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(FracError::OracleFailure {
        x,
        tol,
        estimate: prev,
        change,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(FracError::arg(format!("oracle tolerance must be positive, got {tol}")))
    }
}

/// `_{x_L}D_x^α u(x)` to absolute accuracy `tol`.
pub fn rl_quadrature_left(
    u: &AnalyticFunction1D,
    order: FractionalOrder,
    x: f64,
    x_left: f64,
    tol: f64,
) -> Result<f64> {
    rl_quadrature_left_with(u, order, x, x_left, tol, &QuadratureSettings::default())
}

/// `_x D_{x_R}^α u(x)` to absolute accuracy `tol`.
pub fn rl_quadrature_right(
    u: &AnalyticFunction1D,
    order: FractionalOrder,
    x: f64,
    x_right: f64,
    tol: f64,
) -> Result<f64> {
    rl_quadrature_right_with(u, order, x, x_right, tol, &QuadratureSettings::default())
}

pub fn rl_quadrature_left_with(
    u: &AnalyticFunction1D,
    order: FractionalOrder,
    x: f64,
    x_left: f64,
    tol: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    check_tol(tol)?;
    let len = x - x_left;
    if !(len > 0.0) {
        return Err(FracError::arg(format!("need x_left < x, got x_left = {x_left}, x = {x}")));
    }
    let a = order.value();
    let f2 = &u.f2;
    let integral = singular_integral(order, len, &|t| f2(x - t), x, tol, settings)?;
    let boundary = (u.f)(x_left) * len.powf(-a) / gamma(1.0 - a)
        + (u.f1)(x_left) * len.powf(1.0 - a) / gamma(2.0 - a);
    Ok(integral + boundary)
}

pub fn rl_quadrature_right_with(
    u: &AnalyticFunction1D,
    order: FractionalOrder,
    x: f64,
    x_right: f64,
    tol: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    check_tol(tol)?;
    let len = x_right - x;
    if !(len > 0.0) {
        return Err(FracError::arg(format!("need x < x_right, got x = {x}, x_right = {x_right}")));
    }
    let a = order.value();
    let f2 = &u.f2;
    let integral = singular_integral(order, len, &|t| f2(x + t), x, tol, settings)?;
    let boundary = (u.f)(x_right) * len.powf(-a) / gamma(1.0 - a)
        - (u.f1)(x_right) * len.powf(1.0 - a) / gamma(2.0 - a);
    Ok(integral + boundary)
}
