use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("photon number {n} exceeds Fock cutoff {cutoff}")]
    Cutoff { n: usize, cutoff: usize },
    #[error("population {population:e} reached the top Fock level {cutoff}")]
    Leakage { population: f64, cutoff: usize },
    #[error("expected {expected} atom levels, got {found}")]
    SpinCount { expected: usize, found: usize },
    #[error("atom index {index} out of range for {atom_count} atoms")]
    AtomIndex { index: usize, atom_count: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("states live in different Hilbert layouts")]
    LayoutMismatch,
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("subsystem selector is empty")]
    EmptySelector,
    #[error("sampled measurement branch has probability {0:e}")]
    DegenerateBranch(f64),
    #[error("binomial states with different maximum photon numbers ({0} vs {1})")]
    PhotonNumberMismatch(usize, usize),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("empty search range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter { name, reason: reason.into() }
    }
}
