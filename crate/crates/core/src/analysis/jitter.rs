//! Velocity-jitter robustness sweeps.
//!
//! Each trial draws one relative velocity error per atom and scales all of
//! that atom's durations by the same factor (`ΔT/T ≈ Δv/v`). Clock intervals
//! (separation T₀, probe spacing T′) are not perturbed. Ramsey phases follow
//! the realized flight times, so what remains is the error in the resonant
//! interaction times. Probabilities are computed exactly per trial; only the
//! velocity draws are random.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand_distr::{Distribution, Normal};

use crate::fockspace::{reduced_density, Level, Subsystems};
use crate::protocols::schedule::{build_coherence_with, build_distinction_with, build_generation_with, generation_target_with};
use crate::protocols::{outcome_distribution, AtomPair, CoherenceSchedule, DistinctionSchedule, GenerationSchedule};
use crate::rng::RngStream;
use crate::states::{binomial_state, cat_state, CatSpec};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum JitterDistribution {
    /// `Δv/v` uniform in `[−σ, σ]`.
    Uniform,
    /// `Δv/v ~ N(0, σ²)`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct JitterModel {
    /// `Δv/v`: half-width for uniform, standard deviation for Gaussian.
    pub relative_sigma: f64,
    pub distribution: JitterDistribution,
    pub seed: u64,
}

impl JitterModel {
    pub fn validate(&self) -> Result<()> {
        if self.relative_sigma >= 0.0 && self.relative_sigma.is_finite() {
            Ok(())
        } else {
            Err(Error::parameter("relative_sigma", "must be finite and non-negative"))
        }
    }

    /// Duration multiplier `1 + Δv/v`; draws that would make a duration
    /// non-positive are redrawn.
    pub fn draw_factor(&self, rng: &mut RngStream) -> f64 {
        if self.relative_sigma == 0.0 {
            return 1.0;
        }
        loop {
            let delta = match self.distribution {
                JitterDistribution::Uniform => self.relative_sigma * (2.0 * rng.uniform() - 1.0),
                JitterDistribution::Gaussian => Normal::new(0.0, self.relative_sigma).expect("sigma validated").sample(rng.inner_mut()),
            };
            if 1.0 + delta > 0.0 {
                return 1.0 + delta;
            }
        }
    }
}

/// Which component is fed to the distinction setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DistinctionInput {
    /// `|2, p, φ⟩`, expected record (up, up).
    Excited,
    /// `|2, 1−p, π+φ⟩`, expected record (down, down).
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepProtocol {
    /// Fidelity: cavity overlap with the target cat. Correctness: both
    /// generation atoms found in the ground state.
    Generation(GenerationSchedule),
    /// Fidelity: final cavity vacuum probability. Correctness: expected record.
    Distinction { schedule: DistinctionSchedule, input: DistinctionInput },
    /// Input is the maximal cat with the given sign of η₀. Fidelity: final
    /// cavity vacuum probability. Correctness: parallel (+) / antiparallel (−).
    Coherence { schedule: CoherenceSchedule, sign: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JitterTrial {
    pub index: u64,
    pub factor1: f64,
    pub factor2: f64,
    pub fidelity: f64,
    pub correctness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "summary of an empty sample");
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (sorted.len() - 1) as f64;
            let (i, frac) = (pos.floor() as usize, pos - pos.floor());
            let j = (i + 1).min(sorted.len() - 1);
            sorted[i] + frac * (sorted[j] - sorted[i])
        };
        Summary {
            min: sorted[0],
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: sorted[sorted.len() - 1],
            q05: quantile(0.05),
            q50: quantile(0.5),
            q95: quantile(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JitterReport {
    pub model: JitterModel,
    pub trials: Vec<JitterTrial>,
    pub fidelity: Summary,
    pub correctness: Summary,
}

impl JitterReport {
    /// Aggregates trials in index order, whatever order they were computed in.
    pub fn from_trials(model: JitterModel, mut trials: Vec<JitterTrial>) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::parameter("trials", "must be at least 1"));
        }
        trials.sort_by_key(|t| t.index);
        let fid: Vec<f64> = trials.iter().map(|t| t.fidelity).collect();
        let cor: Vec<f64> = trials.iter().map(|t| t.correctness).collect();
        Ok(JitterReport { model, fidelity: Summary::of(&fid), correctness: Summary::of(&cor), trials })
    }
}

/// Trial `index` of a sweep; depends only on `(model.seed, index)`.
pub fn jitter_trial(
    protocol: &SweepProtocol,
    model: &JitterModel,
    index: u64,
    fock_cutoff: usize,
    tol: &Tolerances,
) -> Result<JitterTrial> {
    model.validate()?;
    let mut rng = RngStream::with_stream(model.seed, index);
    let factor1 = model.draw_factor(&mut rng);
    let factor2 = model.draw_factor(&mut rng);
    let (fidelity, correctness) = match protocol {
        SweepProtocol::Generation(schedule) => {
            let timings = schedule.timings().scaled(factor1, factor2);
            let events = build_generation_with(schedule, &timings, AtomPair::default())?;
            let dist = outcome_distribution(&events, &schedule.params, &schedule.initial_state(fock_cutoff)?, tol)?;
            let state = &dist.branches[0].final_state;
            let target = cat_state(fock_cutoff, &generation_target_with(schedule, &timings)?)?;
            let rho = reduced_density(state, &Subsystems::cavity())?;
            let ground = state.field_component(&[Level::Down, Level::Down])?.norm().powi(2);
            (rho.expectation(&target)?, ground)
        }
        SweepProtocol::Distinction { schedule, input } => {
            let timings = schedule.timings().scaled(factor1, factor2);
            let events = build_distinction_with(schedule, &timings, AtomPair::default())?;
            let component = schedule.excited_component()?;
            let (field, expected) = match input {
                DistinctionInput::Excited => (component, [Level::Up, Level::Up]),
                DistinctionInput::Ground => (component.complement(), [Level::Down, Level::Down]),
            };
            let initial = binomial_state(fock_cutoff, &field)?.with_atoms(&[Level::Down, Level::Down])?;
            let dist = outcome_distribution(&events, &schedule.params, &initial, tol)?;
            (final_vacuum(&dist)?, dist.probability(&expected))
        }
        SweepProtocol::Coherence { schedule, sign } => {
            let timings = schedule.timings().scaled(factor1, factor2);
            let events = build_coherence_with(schedule, &timings, AtomPair::default())?;
            let d = &schedule.detection;
            let cat = CatSpec::maximal(crate::states::BinomialSpec::new(2, d.p, d.phi)?, *sign, schedule.gamma);
            let initial = cat_state(fock_cutoff, &cat)?.with_atoms(&[Level::Down, Level::Down])?;
            let dist = outcome_distribution(&events, &d.params, &initial, tol)?;
            let correct = if *sign >= 0.0 { dist.parallel() } else { dist.antiparallel() };
            (final_vacuum(&dist)?, correct)
        }
    };
    Ok(JitterTrial { index, factor1, factor2, fidelity, correctness })
}

fn final_vacuum(dist: &crate::protocols::OutcomeDistribution) -> Result<f64> {
    Ok(dist.branches.iter().map(|b| b.probability * b.final_state.photon_distribution()[0]).sum())
}

/// Runs `trials` independent trials sequentially.
pub fn jitter_sweep(
    protocol: &SweepProtocol,
    model: &JitterModel,
    trials: u64,
    fock_cutoff: usize,
    tol: &Tolerances,
) -> Result<JitterReport> {
    model.validate()?;
    let trials = (0..trials).map(|i| jitter_trial(protocol, model, i, fock_cutoff, tol)).collect::<Result<Vec<_>>>()?;
    JitterReport::from_trials(*model, trials)
}
