//! Tail curves `F̄_n^m` by exact backward recursion and by the two
//! bounding recursions, on the shared grid.

pub mod qfun;
pub mod run;
pub mod step;
pub mod tail;

pub use qfun::{q1, q2, q_transform, qm, qm2, QArg, QKind};
pub use run::{check_sandwich, pointwise_bounds_check, run, Modes, Row, SandwichRun, SANDWICH_TOL};
pub use step::{
    bound_values, step_exact, step_lower, step_upper, Bound, BoundForm, StepInfo, StepOptions,
};
pub use tail::{base_tail, Normalization, TailCurve};
