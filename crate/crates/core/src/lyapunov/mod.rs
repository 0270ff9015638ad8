//! The Lyapunov functional, its parameters, and the checks built on it.

mod flatness;
mod functional;
mod params;
mod qbounds;
mod verify;

pub use flatness::{chain_check, flatness_diagnostics, lower_image, FlatnessDiagnostics};
pub use functional::{lyapunov_big_l, lyapunov_l, LValue, PositivePart};
pub use params::{check_constraints, choose_params, LyapunovParams, ParamInputs, DEFAULT_MEAN_GAP};
pub use qbounds::{c1_for, c2_for, check_q_bounds, check_t1_t2, g_delta, QBoundSubject, Q_GRID};
pub use verify::{default_delta1_candidates, right_tail_check, verify_bounded};
