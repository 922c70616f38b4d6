//! Error norms, convergence studies, von Neumann amplification sweeps and
//! coefficient audits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adi2d::{solve2d_with, AdiOptions};
use crate::error::{ErrorKind, FracError, Result};
use crate::exec::{map_indexed, Execution};
use crate::frac_coeffs::{FractionalOrder, OperatorRows, Side};
use crate::frac_operators::{apply_left_spline, apply_right_spline};
use crate::grid::{ScalarField1D, ScalarField2D, UniformGrid1D};
use crate::problems::{self, ProblemKind};
use crate::solver1d::solve1d_with;

/// `max_i |U_i - u(x_i, t)|`.
pub fn linf_error_1d(field: &ScalarField1D, exact: impl Fn(f64, f64) -> f64, t: f64) -> f64 {
    field
        .grid()
        .nodes()
        .zip(field.values())
        .fold(0.0, |m, (x, u)| m.max((u - exact(x, t)).abs()))
}

/// `max_{i,j} |U_{ij} - u(x_i, y_j, t)|`.
pub fn linf_error_2d(field: &ScalarField2D, exact: impl Fn(f64, f64, f64) -> f64, t: f64) -> f64 {
    let (gx, gy) = (*field.grid_x(), *field.grid_y());
    let mut m: f64 = 0.0;
    for (j, y) in gy.nodes().enumerate() {
        for (i, x) in gx.nodes().enumerate() {
            m = m.max((field.get(i, j) - exact(x, y, t)).abs());
        }
    }
    m
}

/// `log(e_{k-1}/e_k) / log(h_{k-1}/h_k)`; `None` where either error is missing.
pub fn observed_orders(hs: &[f64], errors: &[Option<f64>]) -> Vec<Option<f64>> {
    assert_eq!(hs.len(), errors.len());
    (0..hs.len())
        .map(|k| {
            if k == 0 {
                return None;
            }
            match (errors[k - 1], errors[k]) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).ln() / (hs[k - 1] / hs[k]).ln()),
                _ => None,
            }
        })
        .collect()
}

/// Time-step rule for a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtRule {
    /// `Δt = h`.
    MatchH,
    Fixed(f64),
}

impl DtRule {
    pub fn dt(self, h: f64) -> f64 {
        match self {
            DtRule::MatchH => h,
            DtRule::Fixed(dt) => dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub dt_rule: DtRule,
    pub oracle_tol: f64,
    /// Overrides the problem's final time.
    pub t_final: Option<f64>,
}

impl StudyParams {
    pub fn new(alpha: f64, beta: Option<f64>) -> Self {
        Self {
            alpha,
            beta,
            dt_rule: DtRule::MatchH,
            oracle_tol: problems::DEFAULT_ORACLE_TOL,
            t_final: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub n: usize,
    pub h: f64,
    pub error: Option<f64>,
    pub order: Option<f64>,
    /// Solver or oracle failure for this entry.
    pub failure: Option<EntryFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub kind: ErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem_id: String,
    pub params: StudyParams,
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceReport {
    pub fn errors(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.error).collect()
    }

    pub fn orders(&self) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.order).collect()
    }
}

/// Max interior deviation of the spline operator from the oracle for an
/// operator-test entry on `n` cells of `(0, 1)`.
pub fn operator_error(id: &str, order: FractionalOrder, n: usize, tol: f64, exec: Execution) -> Result<f64> {
    let (side, u) = problems::operator_test_function(id)?;
    let grid = UniformGrid1D::new(0.0, 1.0, n)?;
    let field = ScalarField1D::from_fn(grid, &*u.f)?;
    let approx = match side {
        Side::Left => apply_left_spline(&field, order)?,
        Side::Right => apply_right_spline(&field, order)?,
    };
    let exact = problems::oracle_on_grid(&u, side, order, &grid, tol, exec)?;
    Ok(approx.iter().zip(&exact).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn order_of(v: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(v)
}

/// l∞ error of registry problem `id` on `n` cells per direction.
pub fn run_case(id: &str, params: &StudyParams, n: usize, exec: Execution) -> Result<f64> {
    let entry = problems::lookup(id)?;
    let h = 1.0 / n as f64;
    let alpha = order_of(params.alpha)?;
    match entry.kind {
        ProblemKind::OperatorTest => operator_error(id, alpha, n, params.oracle_tol, exec),
        ProblemKind::Evolution1D => {
            let mut p = problems::problem1d(id, alpha, params.oracle_tol)?;
            if let Some(t) = params.t_final {
                p.t_final = t;
            }
            let sol = solve1d_with(&p, n, params.dt_rule.dt(h), exec)?;
            let exact = p.exact.as_ref().expect("registry problems have exact solutions");
            Ok(linf_error_1d(&sol.field, &**exact, sol.t_final))
        }
        ProblemKind::Evolution2D => {
            let beta = order_of(
                params
                    .beta
                    .ok_or_else(|| FracError::arg(format!("problem '{id}' needs beta")))?,
            )?;
            let mut p = problems::problem2d(id, alpha, beta, params.oracle_tol)?;
            if let Some(t) = params.t_final {
                p.t_final = t;
            }
            let opts = AdiOptions {
                execution: exec,
                ..Default::default()
            };
            let sol = solve2d_with(&p, n, n, params.dt_rule.dt(h), &opts)?;
            let exact = p.exact.as_ref().expect("registry problems have exact solutions");
            Ok(linf_error_2d(&sol.field, &**exact, sol.t_final))
        }
    }
}

/// Runs `run(n)` for each `n` and tabulates errors and observed orders.
/// Failures are recorded per entry and the study continues.
pub fn convergence_from<F>(
    problem_id: &str,
    params: StudyParams,
    ns: &[usize],
    entries_exec: Execution,
    run: F,
) -> Result<ConvergenceReport>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return Err(FracError::arg("grid sizes must be positive and strictly increasing"));
    }
    let results = map_indexed(entries_exec, 0, ns.len(), |k| run(ns[k]));
    let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let errors: Vec<Option<f64>> = results.iter().map(|r| r.as_ref().ok().copied()).collect();
    let orders = observed_orders(&hs, &errors);
    let entries = (0..ns.len())
        .map(|k| ConvergenceEntry {
            n: ns[k],
            h: hs[k],
            error: errors[k],
            order: orders[k],
            failure: results[k].as_ref().err().map(|e| EntryFailure {
                kind: e.kind(),
                message: e.to_string(),
            }),
        })
        .collect();
    Ok(ConvergenceReport {
        problem_id: problem_id.to_string(),
        params,
        entries,
    })
}

/// Convergence study for a registry problem with `h = 1/n`.
pub fn convergence_study(
    problem_id: &str,
    params: StudyParams,
    ns: &[usize],
    solver_exec: Execution,
    entries_exec: Execution,
) -> Result<ConvergenceReport> {
    problems::lookup(problem_id)?;
    let p = params.clone();
    convergence_from(problem_id, params, ns, entries_exec, |n| run_case(problem_id, &p, n, solver_exec))
}

// Amplification factors.

const GENERIC_N: usize = 512;
pub const SWEEP_SAMPLES: usize = 1024;

/// `Σ_k p_{j,k} e^{iθ(k-j)}` and `Σ_k q_{j,k} e^{iθ(k-j)}` on the row
/// `j = 256` of a 512-cell table.
pub fn symbol_sums(order: FractionalOrder, theta: f64) -> Result<(Complex64, Complex64)> {
    let rows = OperatorRows::shared(order, GENERIC_N)?;
    let j = GENERIC_N / 2;
    let phase = |k: usize| Complex64::from_polar(1.0, theta * (k as f64 - j as f64));
    let sp = rows.left(j).iter().enumerate().map(|(k, p)| p * phase(k)).sum();
    let sq = rows
        .right(j)
        .iter()
        .enumerate()
        .map(|(off, q)| q * phase(j - 1 + off))
        .sum();
    Ok((sp, sq))
}

fn direction_symbol(order: FractionalOrder, theta: f64, xi: f64, eta: f64, gamma: f64) -> Result<Complex64> {
    let (sp, sq) = symbol_sums(order, theta)?;
    Ok(xi * sp + eta * sq + gamma * Complex64::new(0.0, 2.0 * theta.sin()))
}

/// `|Q| = |1 + Z| / |1 - Z|` for the 1D scheme at `θ = ωΔx`.
pub fn amplification_1d(theta: f64, order: FractionalOrder, xi: f64, eta: f64, gamma: f64) -> Result<f64> {
    let z = direction_symbol(order, theta, xi, eta, gamma)?;
    Ok((1.0 + z).norm() / (1.0 - z).norm())
}

/// Parameters of the 2D factor; `x = (α, ξ, η, γ)` and `y = (β, ξ̃, η̃, γ̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionParams {
    pub order: f64,
    pub xi: f64,
    pub eta: f64,
    pub gamma: f64,
}

/// `|Q̃| = |1 + Z_x + Z_y| / |1 - Z_x - Z_y|` with `θ_x = ωΔx`, `θ_y = ωΔy`.
pub fn amplification_2d(theta_x: f64, theta_y: f64, x: &DirectionParams, y: &DirectionParams) -> Result<f64> {
    let zx = direction_symbol(order_of(x.order)?, theta_x, x.xi, x.eta, x.gamma)?;
    let zy = direction_symbol(order_of(y.order)?, theta_y, y.xi, y.eta, y.gamma)?;
    let z = zx + zy;
    Ok((1.0 + z).norm() / (1.0 - z).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationSweep {
    pub x: DirectionParams,
    pub y: Option<DirectionParams>,
    /// `θ = ωΔx` samples on `[0, 2π)`.
    pub thetas: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub max_magnitude: f64,
}

fn thetas(samples: usize) -> Vec<f64> {
    (0..samples).map(|k| 2.0 * PI * k as f64 / samples as f64).collect()
}

fn finish(x: DirectionParams, y: Option<DirectionParams>, thetas: Vec<f64>, magnitudes: Vec<f64>) -> Result<AmplificationSweep> {
    if magnitudes.iter().any(|m| !m.is_finite()) {
        return Err(FracError::arg("amplification factor is not finite"));
    }
    let max_magnitude = magnitudes.iter().copied().fold(0.0, f64::max);
    Ok(AmplificationSweep {
        x,
        y,
        thetas,
        magnitudes,
        max_magnitude,
    })
}

pub fn sweep_1d(x: DirectionParams, samples: usize) -> Result<AmplificationSweep> {
    let order = order_of(x.order)?;
    let th = thetas(samples);
    let mags = th
        .iter()
        .map(|&t| amplification_1d(t, order, x.xi, x.eta, x.gamma))
        .collect::<Result<Vec<_>>>()?;
    finish(x, None, th, mags)
}

/// Sweep along `θ_x = θ_y = θ` (equal spacings).
pub fn sweep_2d(x: DirectionParams, y: DirectionParams, samples: usize) -> Result<AmplificationSweep> {
    let th = thetas(samples);
    let mags = th
        .iter()
        .map(|&t| amplification_2d(t, t, &x, &y))
        .collect::<Result<Vec<_>>>()?;
    finish(x, Some(y), th, mags)
}

pub const LATTICE_ORDERS: [f64; 3] = [1.1, 1.5, 1.9];
pub const LATTICE_SCALES: [f64; 3] = [0.1, 1.0, 10.0];
pub const LATTICE_CONVECTION: [f64; 2] = [0.0, 0.5];

/// Every `(α, ξ, η, γ)` on the test lattice.
pub fn lattice_1d() -> Vec<DirectionParams> {
    let mut out = Vec::new();
    for &order in &LATTICE_ORDERS {
        for &xi in &LATTICE_SCALES {
            for &eta in &LATTICE_SCALES {
                for &gamma in &LATTICE_CONVECTION {
                    out.push(DirectionParams { order, xi, eta, gamma });
                }
            }
        }
    }
    out
}

/// `(x, y)` pairs with `α, β` on the lattice and shared `(ξ, η, γ)`.
pub fn lattice_2d() -> Vec<(DirectionParams, DirectionParams)> {
    let mut out = Vec::new();
    for x in lattice_1d() {
        for &beta in &LATTICE_ORDERS {
            out.push((x, DirectionParams { order: beta, ..x }));
        }
    }
    out
}

// Coefficient audit.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub check: String,
    pub row: usize,
    pub col: Option<usize>,
    pub value: f64,
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub alpha: f64,
    pub n_cells: usize,
    pub checks: usize,
    pub violations: usize,
    pub first_violation: Option<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Auditor {
    checks: usize,
    violations: usize,
    first: Option<AuditViolation>,
}

impl Auditor {
    fn check(&mut self, ok: bool, make: impl FnOnce() -> AuditViolation) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(make());
            }
        }
    }
}

pub const AUDIT_TOL: f64 = 1e-12;

/// Audits the table for `(α, N)`.
pub fn coefficient_audit(order: FractionalOrder, n_cells: usize) -> Result<AuditReport> {
    if n_cells < 4 {
        return Err(FracError::arg(format!("audit needs at least 4 cells, got {n_cells}")));
    }
    audit_rows(&OperatorRows::new(order, n_cells)?)
}

/// Audits an explicit table (possibly corrupted).
///
/// Row sums are checked on every interior row. Tail positivity and the
/// closed-form entries are checked on `2 ≤ i ≤ N-2`; the transpose identity
/// `q_{i,k} = p_{k,i}` on interior rows and columns.
pub fn audit_rows(rows: &OperatorRows) -> Result<AuditReport> {
    let n = rows.n_cells();
    let a = rows.order().value();
    let diag = 2f64.powf(3.0 - a) - 4.0;
    let off = 6.0 - 2f64.powf(5.0 - a) + 3f64.powf(3.0 - a);
    let mut au = Auditor {
        checks: 0,
        violations: 0,
        first: None,
    };
    let close = |v: f64, w: f64| (v - w).abs() <= AUDIT_TOL * (1.0 + w.abs());

    for i in 1..n {
        for k in 1..n {
            let (q, p) = (rows.q(i, k), rows.p(k, i));
            au.check((q - p).abs() <= AUDIT_TOL * (1.0 + p.abs()), || AuditViolation {
                check: "transpose identity q(i,k) = p(k,i)".into(),
                row: i,
                col: Some(k),
                value: q,
                expected: Some(p),
            });
        }
    }

    for i in 2..=n.saturating_sub(2) {
        for k in 0..=i.saturating_sub(2) {
            let v = rows.p(i, k);
            au.check(v > 0.0, || AuditViolation {
                check: "left tail positive".into(),
                row: i,
                col: Some(k),
                value: v,
                expected: None,
            });
        }
        for k in i + 2..=n {
            let v = rows.q(i, k);
            au.check(v > 0.0, || AuditViolation {
                check: "right tail positive".into(),
                row: i,
                col: Some(k),
                value: v,
                expected: None,
            });
        }
        for (check, k, v, w) in [
            ("p(i,i+1) = 1", i + 1, rows.p(i, i + 1), 1.0),
            ("p(i,i) closed form", i, rows.p(i, i), diag),
            ("p(i,i-1) closed form", i - 1, rows.p(i, i - 1), off),
            ("q(i,i-1) = 1", i - 1, rows.q(i, i - 1), 1.0),
            ("q(i,i) closed form", i, rows.q(i, i), diag),
            ("q(i,i+1) closed form", i + 1, rows.q(i, i + 1), off),
        ] {
            au.check(close(v, w), || AuditViolation {
                check: check.into(),
                row: i,
                col: Some(k),
                value: v,
                expected: Some(w),
            });
        }
    }

    for i in 1..n {
        let sp: f64 = rows.left(i).iter().sum();
        au.check(sp < 0.0, || AuditViolation {
            check: "left row sum negative".into(),
            row: i,
            col: None,
            value: sp,
            expected: None,
        });
        let sq: f64 = rows.right(i).iter().sum();
        au.check(sq < 0.0, || AuditViolation {
            check: "right row sum negative".into(),
            row: i,
            col: None,
            value: sq,
            expected: None,
        });
    }

    Ok(AuditReport {
        alpha: a,
        n_cells: n,
        checks: au.checks,
        violations: au.violations,
        first_violation: au.first,
    })
}

/// Max deviation of generic rows `2 ≤ i ≤ N-2` from the stencil `(1, -2, 1)`
/// (both sides), for `α` near 2.
pub fn classical_limit_deviation(order: FractionalOrder, n_cells: usize) -> Result<f64> {
    let rows = OperatorRows::new(order, n_cells)?;
    let mut dev: f64 = 0.0;
    for i in 2..=n_cells - 2 {
        for k in 0..=n_cells {
            let want = match k as i64 - i as i64 {
                -1 | 1 => 1.0,
                0 => -2.0,
                _ => 0.0,
            };
            dev = dev.max((rows.p(i, k) - want).abs()).max((rows.q(i, k) - want).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ord(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn linf_basics() {
        let g = UniformGrid1D::new(0.0, 1.0, 10).unwrap();
        let f = ScalarField1D::from_fn(g, |x| x * x).unwrap();
        assert_eq!(linf_error_1d(&f, |x, _| x * x, 0.0), 0.0);
        let f = ScalarField1D::from_fn(g, |x| x * x + 0.25).unwrap();
        assert_relative_eq!(linf_error_1d(&f, |x, _| x * x, 0.0), 0.25, epsilon = 1e-15);
        let f2 = ScalarField2D::from_fn(g, g, |x, y| x * y - 0.5);
        assert_relative_eq!(linf_error_2d(&f2, |x, y, _| x * y, 1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn orders_of_exact_powers() {
        let hs = [0.1, 0.05, 0.025];
        let o = observed_orders(&hs, &[Some(4e-2), Some(1e-2), Some(2.5e-3)]);
        assert_eq!(o[0], None);
        assert_relative_eq!(o[1].unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(o[2].unwrap(), 2.0, epsilon = 1e-12);
        let o = observed_orders(&hs, &[Some(1.0), None, Some(1.0)]);
        assert_eq!(o, vec![None, None, None]);
    }

    #[test]
    fn study_records_failures() {
        let r = convergence_from("x", StudyParams::new(1.5, None), &[4, 8, 16], Execution::Sequential, |n| {
            if n == 8 {
                Err(FracError::arg("boom"))
            } else {
                Ok(1.0 / (n * n) as f64)
            }
        })
        .unwrap();
        assert_eq!(r.entries[1].failure.as_ref().unwrap().kind, ErrorKind::InvalidArgument);
        assert_eq!(r.entries[2].order, None);
        assert!(convergence_from("x", StudyParams::new(1.5, None), &[8, 4], Execution::Sequential, |_| Ok(1.0)).is_err());
    }

    #[test]
    fn amplification_trivial_cases() {
        for k in 0..16 {
            let t = k as f64 * 0.4;
            assert_relative_eq!(amplification_1d(t, ord(1.5), 0.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
            assert_relative_eq!(amplification_1d(t, ord(1.5), 0.0, 0.0, 0.7).unwrap(), 1.0, epsilon = 1e-14);
        }
        let z = DirectionParams { order: 1.5, xi: 0.0, eta: 0.0, gamma: 0.0 };
        let y = DirectionParams { order: 1.3, xi: 1.0, eta: 2.0, gamma: 0.3 };
        for t in [0.3, 1.7, 3.0] {
            let a = amplification_2d(t, t, &z, &y).unwrap();
            let b = amplification_1d(t, ord(1.3), 1.0, 2.0, 0.3).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-14);
            assert_relative_eq!(amplification_2d(t, t, &z, &z).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn symbol_has_negative_real_part() {
        for a in [1.1, 1.5, 1.9] {
            for k in 0..64 {
                let (sp, sq) = symbol_sums(ord(a), 2.0 * PI * k as f64 / 64.0).unwrap();
                assert!(sp.re < 0.0 && sq.re < 0.0, "α={a} k={k}");
            }
        }
    }

    #[test]
    fn sweep_bounded() {
        let s = sweep_1d(DirectionParams { order: 1.5, xi: 1.0, eta: 1.0, gamma: 0.3 }, SWEEP_SAMPLES).unwrap();
        assert_eq!(s.magnitudes.len(), SWEEP_SAMPLES);
        assert!(s.max_magnitude <= 1.0 + 1e-12);
        assert_eq!(s.max_magnitude, s.magnitudes.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn audit_passes_and_detects_corruption() {
        let r = coefficient_audit(ord(1.5), 64).unwrap();
        assert!(r.passed(), "{:?}", r.first_violation);
        let rows = OperatorRows::new(ord(1.5), 16).unwrap();
        let bad = rows.perturbed(Side::Right, 5, 9, 0.1).unwrap();
        let r = audit_rows(&bad).unwrap();
        assert!(!r.passed());
        let v = r.first_violation.unwrap();
        assert_eq!((v.row, v.col), (5, Some(9)));
        assert!(coefficient_audit(ord(1.5), 3).is_err());
    }

    #[test]
    fn classical_limit() {
        assert!(classical_limit_deviation(ord(2.0 - 1e-9), 16).unwrap() < 1e-6);
        assert!(classical_limit_deviation(ord(1.5), 16).unwrap() > 0.1);
    }
}
