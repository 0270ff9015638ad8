//! Monte Carlo sampling of the maximal displacement.

mod ecdf;
mod sampler;
mod tightness;

pub use ecdf::{empirical_cdf, EmpiricalCdf};
pub use sampler::{sample_max, TreeSampler, DEFAULT_NODE_CAP};
pub use tightness::{tightness_report, TightnessRow, TightnessTable};
