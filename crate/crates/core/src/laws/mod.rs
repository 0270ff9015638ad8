//! Branching and displacement laws, model files and assumption checkers.

pub mod assumptions;
pub mod branching;
pub mod config;
pub mod displacement;
pub mod schedule;

pub use assumptions::{
    check_branching_assumptions, check_identical_marginals, check_joint_tail,
    check_marginal_assumptions, fit_joint_tail, joint_tail_at, BranchingVariant, JointTailFit,
    JointTailVariant,
};
pub use branching::{make_branching_schedule, BranchingLaw, OffspringPmf, PmfSpec};
pub use config::{DistSpec, Model, ModelConfig};
pub use displacement::{
    symmetrize, DisplacementLaw, DisplacementLevel, EquicorrelatedGaussian, Family, JointLaw,
    JointSampler, ProductMixture,
};
pub use schedule::{Schedule, ScheduleKind};
