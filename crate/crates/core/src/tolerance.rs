/// Normalization, Hermiticity and cutoff-leakage tolerance.
pub const NORM_TOL: f64 = 1e-12;
/// Fidelity comparison tolerance for exact-arithmetic identities.
pub const FID_TOL: f64 = 1e-6;
/// Default highest retained photon number. Protocols never populate more than
/// two photons, so any weight near the top level flags a bug.
pub const DEFAULT_FOCK_CUTOFF: usize = 8;

/// Tolerances used by the interpreter and the analysis routines; overridable
/// from run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Tolerances {
    pub norm: f64,
    pub fidelity: f64,
    /// Residual bound for the joint timing conditions.
    pub timing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { norm: NORM_TOL, fidelity: FID_TOL, timing: 1e-3 }
    }
}
