//! Exact state-vector simulation of resonant cavity-QED protocols that
//! generate and detect a two-photon binomial Schrödinger cat.
//!
//! The crate is `no_std` (with `alloc`). It is organised bottom-up:
//!
//! - [`fockspace`]: truncated single-mode cavity tensored with two-level atoms,
//!   inner products, partial traces and purity.
//! - [`states`]: generalized binomial states and their cat superpositions.
//! - [`dynamics`]: resonant Jaynes-Cummings crossing, Ramsey rotation, free
//!   evolution and projective atomic measurement.
//! - [`protocols`]: event schedules for generation, component distinction and
//!   coherence detection, plus the interpreter that runs them.
//! - [`analysis`]: joint timing solver, velocity-jitter sweeps, sampled
//!   outcome statistics and the lifetime feasibility check.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dynamics;
mod error;
pub mod fockspace;
pub mod protocols;
pub mod rng;
pub mod states;
mod tolerance;

pub use error::{Error, Result};
pub use fockspace::{DensityMatrix, HilbertLayout, Level, QuantumState, Subsystems};
pub use num_complex::Complex64 as C64;
pub use rng::RngStream;
pub use tolerance::{Tolerances, DEFAULT_FOCK_CUTOFF, FID_TOL, NORM_TOL};
