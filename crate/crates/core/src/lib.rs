//! Spline-based discretizations of two-sided Riemann–Liouville fractional
//! derivatives of order `α ∈ (1, 2)`, with Crank–Nicolson and
//! Peaceman–Rachford ADI solvers for fractional convection–diffusion
//! equations in one and two space dimensions.

pub mod adi2d;
pub mod analysis;
pub mod error;
pub mod exec;
pub mod frac_coeffs;
pub mod frac_operators;
pub mod grid;
pub mod line_operator;
pub mod linalg;
pub mod problems;
pub mod solver1d;
pub mod special;

pub use error::{ErrorKind, FracError, Result};
pub use exec::Execution;
pub use frac_coeffs::{FractionalOrder, OperatorRows, Side};
pub use grid::{ScalarField1D, ScalarField2D, UniformGrid1D};
pub use line_operator::LineOperator;
pub use solver1d::{solve1d, Problem1D, Source1D};
pub use adi2d::{solve2d, AdiOptions, Problem2D, Source2D, SweepOrder};
