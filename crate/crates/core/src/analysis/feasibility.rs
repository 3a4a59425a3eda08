//! Lifetime budget: decay is negligible when the atomic and photon lifetimes
//! both exceed the atom-cavity interaction time.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FeasibilityBudget {
    /// Atomic mean lifetime (s).
    pub tau_at: f64,
    /// Cavity photon mean lifetime (s).
    pub tau_cav: f64,
    /// Duration of the whole sequence (s).
    pub total_sequence_time: f64,
    /// Longest single atom-cavity interaction (s).
    pub max_interaction_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibilityVerdict {
    pub pass: bool,
    /// `τ_at / T`, infinite for `T = 0`.
    pub atom_margin: f64,
    /// `τ_cav / T`.
    pub cavity_margin: f64,
    /// `τ_at / total_sequence_time`; informational, atoms should also survive
    /// the whole sequence.
    pub sequence_margin: f64,
}

impl FeasibilityBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_at", self.tau_at), ("tau_cav", self.tau_cav)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::parameter(name, "lifetimes must be positive"));
            }
        }
        for (name, v) in [("total_sequence_time", self.total_sequence_time), ("max_interaction_time", self.max_interaction_time)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::parameter(name, "times must be non-negative"));
            }
        }
        Ok(())
    }
}

pub fn feasibility_check(budget: &FeasibilityBudget) -> Result<FeasibilityVerdict> {
    budget.validate()?;
    let t = budget.max_interaction_time;
    Ok(FeasibilityVerdict {
        pass: budget.tau_at > t && budget.tau_cav > t,
        atom_margin: budget.tau_at / t,
        cavity_margin: budget.tau_cav / t,
        sequence_margin: budget.tau_at / budget.total_sequence_time,
    })
}
