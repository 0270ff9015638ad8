//! Generalized branching random walks on a uniform grid: offspring and
//! displacement laws, a Monte Carlo simulator of the maximum, the backward
//! tail recursion with its two bounding recursions, and the Lyapunov-based
//! checks of tightness.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod laws;
pub mod lyapunov;
pub mod recurse;
pub mod report;
pub mod seed;
pub mod simulate;

pub use error::{Error, Result};
pub use grid::{Grid, Pmf};
pub use recurse::TailCurve;
pub use report::{AssumptionReport, Check, Report, RunReport};
