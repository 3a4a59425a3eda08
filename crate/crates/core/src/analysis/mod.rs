//! Numerical studies around the protocols.

mod feasibility;
mod jitter;
mod stats;
mod timing;

pub use feasibility::{feasibility_check, FeasibilityBudget, FeasibilityVerdict};
pub use jitter::{
    jitter_sweep, jitter_trial, DistinctionInput, JitterDistribution, JitterModel, JitterReport, JitterTrial, Summary, SweepProtocol,
};
pub use stats::{outcome_statistics, outcome_trial, EmpiricalDistribution};
pub use timing::{joint_fidelity, residuals, solve_joint_timing, solve_joint_timing_with_step, TimingSolution};
