//! Coefficient tables for the linear-spline approximations of the left and
//! right Riemann–Liouville derivatives of order α ∈ (1, 2).
//!
//! The left operator at interior node `i` is a contraction of the node values
//! `u_0..=u_{i+1}` against the row `p_{i,·}`; the right operator contracts
//! `u_{i-1}..=u_N` against `q_{i,·}`. Both rows are second differences of the
//! spline-integral weights `a_{i,k}` and `b_{i,k}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{FracError, Result};
use crate::special::int_pow;

/// Fractional order in the open interval (1, 2).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 1.0 && value < 2.0 {
            Ok(Self(value))
        } else {
            Err(FracError::arg(format!(
                "fractional order must lie in (1, 2), got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = FracError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(order: FractionalOrder) -> f64 {
        order.0
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Left spline-integral weight `a_{i,k}`, `0 ≤ k ≤ i`.
///
/// `a_{0,0}` is the weight of an integral over the empty interval and is 0.
pub fn a_coef(i: usize, k: usize, order: FractionalOrder) -> Result<f64> {
    if k > i {
        return Err(FracError::arg(format!("a_coef requires k <= i, got i={i}, k={k}")));
    }
    Ok(a_unchecked(i, k, order.value()))
}

/// Right spline-integral weight `b_{i,k}`, `i ≤ k ≤ N`.
///
/// The `k = i` branch takes precedence over `k = N`; `b_{N,N}` is the weight
/// of an empty integral and is 0.
pub fn b_coef(i: usize, k: usize, order: FractionalOrder, n_cells: usize) -> Result<f64> {
    if i > k || k > n_cells {
        return Err(FracError::arg(format!(
            "b_coef requires i <= k <= N, got i={i}, k={k}, N={n_cells}"
        )));
    }
    Ok(b_unchecked(i, k, order.value(), n_cells))
}

fn a_unchecked(i: usize, k: usize, alpha: f64) -> f64 {
    let e3 = 3.0 - alpha;
    if k == i {
        if i == 0 {
            0.0
        } else {
            1.0
        }
    } else if k == 0 {
        let i = i as i64;
        int_pow(i - 1, e3) - int_pow(i, 2.0 - alpha) * (i as f64 - 3.0 + alpha)
    } else {
        second_difference(i as i64 - k as i64, e3)
    }
}

fn b_unchecked(i: usize, k: usize, alpha: f64, n: usize) -> f64 {
    let e3 = 3.0 - alpha;
    if k == i {
        if i == n {
            0.0
        } else {
            1.0
        }
    } else if k == n {
        let m = (n - i) as i64;
        (3.0 - alpha - m as f64) * int_pow(m, 2.0 - alpha) + int_pow(m - 1, e3)
    } else {
        second_difference(k as i64 - i as i64, e3)
    }
}

/// `(m+1)^e - 2 m^e + (m-1)^e` for `m ≥ 1`.
#[inline]
fn second_difference(m: i64, e: f64) -> f64 {
    int_pow(m + 1, e) - 2.0 * int_pow(m, e) + int_pow(m - 1, e)
}

fn check_interior(i: usize, n_cells: usize) -> Result<()> {
    if n_cells < 2 || i == 0 || i >= n_cells {
        return Err(FracError::arg(format!(
            "row index {i} is not interior for N = {n_cells}"
        )));
    }
    Ok(())
}

/// Row `(p_{i,0}, …, p_{i,i+1})` of the left operator.
pub fn left_row(i: usize, order: FractionalOrder, n_cells: usize) -> Result<Vec<f64>> {
    check_interior(i, n_cells)?;
    let alpha = order.value();
    let mut row = Vec::with_capacity(i + 2);
    for k in 0..i {
        row.push(
            a_unchecked(i - 1, k, alpha) - 2.0 * a_unchecked(i, k, alpha)
                + a_unchecked(i + 1, k, alpha),
        );
    }
    row.push(-2.0 * a_unchecked(i, i, alpha) + a_unchecked(i + 1, i, alpha));
    row.push(a_unchecked(i + 1, i + 1, alpha));
    Ok(row)
}

/// Row `(q_{i,i-1}, …, q_{i,N})` of the right operator.
pub fn right_row(i: usize, order: FractionalOrder, n_cells: usize) -> Result<Vec<f64>> {
    check_interior(i, n_cells)?;
    let alpha = order.value();
    let n = n_cells;
    let mut row = Vec::with_capacity(n - i + 2);
    row.push(b_unchecked(i - 1, i - 1, alpha, n));
    row.push(-2.0 * b_unchecked(i, i, alpha, n) + b_unchecked(i - 1, i, alpha, n));
    for k in (i + 1)..=n {
        row.push(
            b_unchecked(i - 1, k, alpha, n) - 2.0 * b_unchecked(i, k, alpha, n)
                + b_unchecked(i + 1, k, alpha, n),
        );
    }
    Ok(row)
}

/// Which of the two one-sided operators a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Precomputed `p` and `q` rows for every interior node of an `N`-cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorRows {
    order: FractionalOrder,
    n_cells: usize,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl OperatorRows {
    pub fn new(order: FractionalOrder, n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(FracError::arg(format!(
                "operator rows need at least 2 cells, got {n_cells}"
            )));
        }
        let left = (1..n_cells)
            .map(|i| left_row(i, order, n_cells))
            .collect::<Result<Vec<_>>>()?;
        let right = (1..n_cells)
            .map(|i| right_row(i, order, n_cells))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            order,
            n_cells,
            left,
            right,
        })
    }

    /// Process-wide cached table for `(order, n_cells)`.
    pub fn shared(order: FractionalOrder, n_cells: usize) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(u64, usize), Arc<OperatorRows>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();

        let key = (order.value().to_bits(), n_cells);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rows) = cache.lock().expect("coefficient cache poisoned").get(&key) {
            return Ok(Arc::clone(rows));
        }
        // Built outside the lock; a concurrent duplicate build is harmless.
        let rows = Arc::new(Self::new(order, n_cells)?);
        let mut guard = cache.lock().expect("coefficient cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(rows)))
    }

    #[inline]
    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// `p_{i,0..=i+1}` for interior `i`.
    #[inline]
    pub fn left(&self, i: usize) -> &[f64] {
        &self.left[i - 1]
    }

    /// `q_{i,i-1..=N}` for interior `i`; element 0 is `q_{i,i-1}`.
    #[inline]
    pub fn right(&self, i: usize) -> &[f64] {
        &self.right[i - 1]
    }

    /// `p_{i,k}`, zero outside the stored band.
    pub fn p(&self, i: usize, k: usize) -> f64 {
        self.left(i).get(k).copied().unwrap_or(0.0)
    }

    /// `q_{i,k}`, zero outside the stored band.
    pub fn q(&self, i: usize, k: usize) -> f64 {
        if k + 1 < i {
            0.0
        } else {
            self.right(i).get(k + 1 - i).copied().unwrap_or(0.0)
        }
    }

    /// Copy of the table with one entry shifted by `delta`. Used to check
    /// that audits catch corrupted coefficients.
    pub fn perturbed(&self, side: Side, i: usize, k: usize, delta: f64) -> Result<Self> {
        check_interior(i, self.n_cells)?;
        let mut out = self.clone();
        let slot = match side {
            Side::Left => out.left[i - 1].get_mut(k),
            Side::Right if k + 1 >= i => out.right[i - 1].get_mut(k + 1 - i),
            Side::Right => None,
        };
        match slot {
            Some(v) => {
                *v += delta;
                Ok(out)
            }
            None => Err(FracError::arg(format!(
                "entry ({i}, {k}) is outside the {side:?} band"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ord(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn order_rejects_closed_endpoints() {
        for bad in [1.0, 2.0, 0.5, 2.5, f64::NAN, f64::INFINITY] {
            assert!(FractionalOrder::new(bad).is_err(), "{bad}");
        }
        assert!(FractionalOrder::new(1.0 + 1e-12).is_ok());
        assert!(FractionalOrder::new(2.0 - 1e-9).is_ok());
    }

    #[test]
    fn a_coef_examples() {
        for i in 1..10 {
            assert_eq!(a_coef(i, i, ord(1.3)).unwrap(), 1.0);
        }
        assert_eq!(a_coef(0, 0, ord(1.7)).unwrap(), 0.0);
        // 1^{1.5} - 2^{0.5} (2 - 3 + 1.5)
        let want = 1.0 - 0.5 * 2f64.sqrt();
        assert_relative_eq!(a_coef(2, 0, ord(1.5)).unwrap(), want, epsilon = 1e-14);
        assert_relative_eq!(want, 0.292_893_218_813_452_5, epsilon = 1e-15);
        assert!(a_coef(2, 3, ord(1.5)).is_err());
    }

    #[test]
    fn b_coef_examples() {
        let n = 12;
        for i in 0..n {
            assert_eq!(b_coef(i, i, ord(1.4), n).unwrap(), 1.0);
        }
        assert_eq!(b_coef(n, n, ord(1.4), n).unwrap(), 0.0);
        for a in [1.1, 1.5, 1.9] {
            assert_relative_eq!(b_coef(n - 1, n, ord(a), n).unwrap(), 2.0 - a, epsilon = 1e-15);
        }
        let want = 2f64.powf(1.5) - 2.0;
        assert_relative_eq!(b_coef(3, 4, ord(1.5), n).unwrap(), want, epsilon = 1e-14);
        assert_relative_eq!(want, 0.828_427_124_746_190_1, epsilon = 1e-15);
        assert!(b_coef(4, 3, ord(1.5), n).is_err());
        assert!(b_coef(3, n + 1, ord(1.5), n).is_err());
    }

    #[test]
    fn row_lengths() {
        let n = 9;
        for i in 1..n {
            assert_eq!(left_row(i, ord(1.5), n).unwrap().len(), i + 2);
            assert_eq!(right_row(i, ord(1.5), n).unwrap().len(), n - i + 2);
        }
        assert!(left_row(0, ord(1.5), n).is_err());
        assert!(left_row(n, ord(1.5), n).is_err());
        assert!(right_row(0, ord(1.5), n).is_err());
    }

    #[test]
    fn interior_closed_forms_at_one_point_five() {
        let n = 20;
        let diag = 2f64.powf(1.5) - 4.0;
        let off = 6.0 - 2f64.powf(3.5) + 3f64.powf(1.5);
        assert_relative_eq!(diag, -1.171_572_875_253_81, epsilon = 1e-14);
        assert_relative_eq!(off, -0.117_556_076_278_129_14, epsilon = 1e-13);
        let rows = OperatorRows::new(ord(1.5), n).unwrap();
        for i in 2..n - 1 {
            assert_eq!(rows.p(i, i + 1), 1.0);
            assert_relative_eq!(rows.p(i, i), diag, epsilon = 1e-13);
            assert_relative_eq!(rows.p(i, i - 1), off, epsilon = 1e-13);
            assert_eq!(rows.q(i, i - 1), 1.0);
            assert_relative_eq!(rows.q(i, i), diag, epsilon = 1e-13);
            assert_relative_eq!(rows.q(i, i + 1), off, epsilon = 1e-13);
        }
    }

    #[test]
    fn right_row_sums_are_negative() {
        let rows = OperatorRows::new(ord(1.3), 16).unwrap();
        for i in 1..16 {
            let s: f64 = rows.right(i).iter().sum();
            assert!(s < 0.0, "row {i} sum {s}");
        }
    }

    #[test]
    fn banded_accessors_are_zero_outside() {
        let rows = OperatorRows::new(ord(1.5), 8).unwrap();
        assert_eq!(rows.p(3, 5), 0.0);
        assert_eq!(rows.q(5, 3), 0.0);
        assert_eq!(rows.q(5, 4), 1.0);
    }

    #[test]
    fn shared_cache_returns_same_table() {
        let a = OperatorRows::shared(ord(1.37), 11).unwrap();
        let b = OperatorRows::shared(ord(1.37), 11).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, OperatorRows::new(ord(1.37), 11).unwrap());
    }

    #[test]
    fn perturbation_touches_one_entry() {
        let rows = OperatorRows::new(ord(1.5), 8).unwrap();
        let bad = rows.perturbed(Side::Right, 3, 6, 0.1).unwrap();
        assert_relative_eq!(bad.q(3, 6) - rows.q(3, 6), 0.1, epsilon = 1e-15);
        assert_eq!(bad.q(3, 5), rows.q(3, 5));
        assert!(rows.perturbed(Side::Right, 5, 1, 0.1).is_err());
    }

    #[test]
    fn order_serde_validates() {
        let o: FractionalOrder = serde_json::from_str("1.25").unwrap();
        assert_eq!(o.value(), 1.25);
        assert!(serde_json::from_str::<FractionalOrder>("2.0").is_err());
    }
}
