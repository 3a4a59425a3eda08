//! Event schedules and the interpreter that runs them on [`QuantumState`]s.
//!
//! A protocol is a time-ordered list of [`ProtocolEvent`]s. Builders in
//! [`schedule`] translate the generation, distinction and coherence setups
//! into events; [`run_protocol`] samples measurement outcomes and
//! [`outcome_distribution`] enumerates them exactly.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynamics::{self, PhysicalParams, RamseySetting};
use crate::fockspace::{HilbertLayout, Level, QuantumState, Subsystems};
use crate::rng::RngStream;
use crate::{Error, Result, Tolerances, C64};

pub mod schedule;

pub use schedule::{
    build_coherence, build_distinction, build_generation, generation_target, AtomPair, CoherenceSchedule, DetectionTimings,
    DistinctionSchedule, FullPipeline, GammaFit, GenerationSchedule, GenerationTimings,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum EventKind {
    /// Injects `𝒩(|↑_first ↓_second⟩ + η₀|↓_first ↑_second⟩)` into two atoms
    /// that are currently both in the ground state.
    Entangle {
        first: usize,
        second: usize,
        eta0: f64,
    },
    Ramsey {
        atom: usize,
        setting: RamseySetting,
    },
    /// Resonant crossing of the cavity.
    Cavity {
        atom: usize,
        duration: f64,
    },
    Free {
        duration: f64,
        acted_on: Subsystems,
    },
    Measure {
        atom: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProtocolEvent {
    /// Start time relative to the beginning of the protocol (s).
    pub start: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: EventKind,
}

impl ProtocolEvent {
    pub fn new(start: f64, kind: EventKind) -> Self {
        ProtocolEvent { start, kind }
    }

    pub fn duration(&self) -> f64 {
        match self.kind {
            EventKind::Cavity { duration, .. } | EventKind::Free { duration, .. } => duration,
            _ => 0.0,
        }
    }
}

/// Checks atom indices against `layout`, time ordering, and that the cavity
/// never holds two atoms at once.
pub fn validate_events(events: &[ProtocolEvent], layout: &HilbertLayout) -> Result<()> {
    let mut last_start = f64::NEG_INFINITY;
    let mut cavity_free_at = f64::NEG_INFINITY;
    // tolerate rounding in accumulated timestamps
    let slack = |t: f64| 1e-12 * t.abs().max(1.0);
    for (i, event) in events.iter().enumerate() {
        if !event.start.is_finite() || event.start + slack(event.start) < last_start {
            return Err(Error::Schedule(alloc::format!("event {i} starts before its predecessor")));
        }
        last_start = event.start;
        let d = event.duration();
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::Schedule(alloc::format!("event {i} has invalid duration {d}")));
        }
        match event.kind {
            EventKind::Entangle { first, second, eta0 } => {
                layout.check_atom(first)?;
                layout.check_atom(second)?;
                if first == second || !eta0.is_finite() {
                    return Err(Error::Schedule(alloc::format!("event {i}: invalid entangled pair")));
                }
            }
            EventKind::Ramsey { atom, .. } | EventKind::Measure { atom } => layout.check_atom(atom)?,
            EventKind::Cavity { atom, duration } => {
                layout.check_atom(atom)?;
                if event.start + slack(event.start) < cavity_free_at {
                    return Err(Error::Schedule(alloc::format!(
                        "event {i}: atom {atom} enters the cavity before the previous atom has left"
                    )));
                }
                cavity_free_at = event.start + duration;
            }
            EventKind::Free { acted_on, .. } => acted_on.check(layout)?,
        }
    }
    Ok(())
}

fn entangle(state: &QuantumState, first: usize, second: usize, eta0: f64, tol: f64) -> Result<QuantumState> {
    let layout = *state.layout();
    let (m1, m2) = (1usize << first, 1usize << second);
    let norm = 1.0 / (1.0 + eta0 * eta0).sqrt();
    let amps = state.amplitudes();
    let excited: f64 = amps.iter().enumerate().filter(|(i, _)| i & (m1 | m2) != 0).map(|(_, a)| a.norm_sqr()).sum();
    if excited > tol {
        return Err(Error::Schedule(alloc::format!(
            "entangled pair requires atoms {first} and {second} in the ground state (excited weight {excited:e})"
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for (i, a) in amps.iter().enumerate().filter(|(i, _)| i & (m1 | m2) == 0) {
        out[i | m1] = a * norm;
        out[i | m2] = a * (norm * eta0);
    }
    Ok(QuantumState::from_raw(layout, out))
}

/// Applies a non-measurement event.
fn apply_unitary(state: &QuantumState, kind: &EventKind, params: &PhysicalParams, tol: &Tolerances) -> Result<QuantumState> {
    match *kind {
        EventKind::Entangle { first, second, eta0 } => entangle(state, first, second, eta0, tol.norm),
        EventKind::Ramsey { atom, setting } => dynamics::ramsey_rotate(state, atom, &setting),
        EventKind::Cavity { atom, duration } => dynamics::jc_evolve_with_tolerance(state, atom, params, duration, tol.norm),
        EventKind::Free { duration, acted_on } => dynamics::free_evolve(state, params, duration, &acted_on),
        EventKind::Measure { .. } => unreachable!("measurements are handled by the caller"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasurementEntry {
    pub atom: usize,
    pub p_up: f64,
    pub p_down: f64,
    pub outcome: Level,
}

/// Diagnostics gathered while interpreting a protocol.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub seed: u64,
    pub stream: u64,
    /// Largest `|‖ψ‖ − 1|` seen after any event.
    pub norm_drift: f64,
    /// Largest top-Fock-level population seen after any event.
    pub max_leakage: f64,
    pub measurements: Vec<MeasurementEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub final_state: QuantumState,
    pub outcomes: Vec<Level>,
    pub report: RunReport,
}

pub fn run_protocol(events: &[ProtocolEvent], params: &PhysicalParams, initial: &QuantumState, rng: &mut RngStream) -> Result<ProtocolRun> {
    run_protocol_with(events, params, initial, rng, &Tolerances::default())
}

pub fn run_protocol_with(
    events: &[ProtocolEvent],
    params: &PhysicalParams,
    initial: &QuantumState,
    rng: &mut RngStream,
    tol: &Tolerances,
) -> Result<ProtocolRun> {
    validate_events(events, initial.layout())?;
    let mut report = RunReport {
        seed: rng.seed(),
        stream: rng.stream(),
        norm_drift: (initial.norm() - 1.0).abs(),
        max_leakage: initial.top_level_population(),
        measurements: Vec::new(),
    };
    let mut outcomes = Vec::new();
    let mut state = initial.clone();
    for event in events {
        state = match event.kind {
            EventKind::Measure { atom } => {
                let (p_up, p_down) = dynamics::branch_probabilities(&state, atom)?;
                let m = dynamics::measure_atom(&state, atom, rng)?;
                report.measurements.push(MeasurementEntry { atom, p_up, p_down, outcome: m.outcome });
                outcomes.push(m.outcome);
                m.collapsed
            }
            ref kind => apply_unitary(&state, kind, params, tol)?,
        };
        report.norm_drift = report.norm_drift.max((state.norm() - 1.0).abs());
        report.max_leakage = report.max_leakage.max(state.top_level_population());
    }
    if report.max_leakage > tol.norm {
        return Err(Error::Leakage { population: report.max_leakage, cutoff: initial.layout().fock_cutoff() });
    }
    Ok(ProtocolRun { final_state: state, outcomes, report })
}

/// One branch of the measurement tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcomes: Vec<Level>,
    pub probability: f64,
    /// Normalized post-measurement state at the end of the protocol.
    pub final_state: QuantumState,
}

/// Exact joint distribution of measurement records.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub branches: Vec<Branch>,
}

impl OutcomeDistribution {
    pub fn probability(&self, outcomes: &[Level]) -> f64 {
        self.branches.iter().filter(|b| b.outcomes == outcomes).map(|b| b.probability).sum()
    }

    pub fn total(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// Probability that the last two recorded outcomes agree.
    pub fn parallel(&self) -> f64 {
        self.branches.iter().filter(|b| matches!(b.outcomes.as_slice(), [.., x, y] if x == y)).map(|b| b.probability).sum()
    }

    /// Probability that the last two recorded outcomes differ.
    pub fn antiparallel(&self) -> f64 {
        self.branches.iter().filter(|b| matches!(b.outcomes.as_slice(), [.., x, y] if x != y)).map(|b| b.probability).sum()
    }
}

/// Follows every measurement branch with nonzero weight and returns the exact
/// record probabilities (no sampling).
pub fn outcome_distribution(
    events: &[ProtocolEvent],
    params: &PhysicalParams,
    initial: &QuantumState,
    tol: &Tolerances,
) -> Result<OutcomeDistribution> {
    validate_events(events, initial.layout())?;
    let mut branches = vec![Branch { outcomes: Vec::new(), probability: 1.0, final_state: initial.clone() }];
    for event in events {
        branches = match event.kind {
            EventKind::Measure { atom } => {
                let mut next = Vec::with_capacity(2 * branches.len());
                for b in branches {
                    for level in [Level::Up, Level::Down] {
                        match dynamics::project_atom(&b.final_state, atom, level) {
                            Ok((state, p)) => {
                                let mut outcomes = b.outcomes.clone();
                                outcomes.push(level);
                                next.push(Branch { outcomes, probability: b.probability * p, final_state: state });
                            }
                            Err(Error::DegenerateBranch(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
                next
            }
            ref kind => branches
                .into_iter()
                .map(|b| Ok(Branch { final_state: apply_unitary(&b.final_state, kind, params, tol)?, ..b }))
                .collect::<Result<_>>()?,
        };
    }
    Ok(OutcomeDistribution { branches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};
    use Level::{Down, Up};

    fn params() -> PhysicalParams {
        PhysicalParams::new(1.0, 23.0).unwrap()
    }

    #[test]
    fn empty_event_list_is_identity() {
        let s = QuantumState::basis(HilbertLayout::new(4, 1).unwrap(), 1, &[Up]).unwrap();
        let run = run_protocol(&[], &params(), &s, &mut RngStream::new(1)).unwrap();
        assert_eq!(run.final_state, s);
        assert!(run.outcomes.is_empty());
        assert_eq!(run.report.seed, 1);
    }

    #[test]
    fn single_cavity_event() {
        let l = HilbertLayout::new(4, 1).unwrap();
        let s = QuantumState::basis(l, 0, &[Up]).unwrap();
        let ev = [ProtocolEvent::new(0.0, EventKind::Cavity { atom: 0, duration: FRAC_PI_2 })];
        let run = run_protocol(&ev, &params(), &s, &mut RngStream::new(1)).unwrap();
        let a = run.final_state.amplitude(1, &[Down]).unwrap();
        assert!((a + C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn overlapping_cavity_crossings_are_rejected() {
        let l = HilbertLayout::new(4, 2).unwrap();
        let ev = [
            ProtocolEvent::new(0.0, EventKind::Cavity { atom: 0, duration: 1.0 }),
            ProtocolEvent::new(0.5, EventKind::Cavity { atom: 1, duration: 1.0 }),
        ];
        assert!(matches!(validate_events(&ev, &l), Err(Error::Schedule(_))));
        let ev = [ProtocolEvent::new(1.0, EventKind::Measure { atom: 0 }), ProtocolEvent::new(0.5, EventKind::Measure { atom: 1 })];
        assert!(validate_events(&ev, &l).is_err());
    }

    #[test]
    fn entangle_requires_ground_atoms() {
        let l = HilbertLayout::new(2, 2).unwrap();
        let ground = QuantumState::basis(l, 0, &[Down, Down]).unwrap();
        let ev = [ProtocolEvent::new(0.0, EventKind::Entangle { first: 0, second: 1, eta0: -1.0 })];
        let run = run_protocol(&ev, &params(), &ground, &mut RngStream::new(0)).unwrap();
        let s = run.final_state;
        assert!((s.amplitude(0, &[Up, Down]).unwrap().re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((s.amplitude(0, &[Down, Up]).unwrap().re + 0.5f64.sqrt()).abs() < 1e-15);
        let excited = QuantumState::basis(l, 0, &[Up, Down]).unwrap();
        assert!(run_protocol(&ev, &params(), &excited, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn exact_distribution_of_a_half_rotation() {
        let l = HilbertLayout::new(2, 1).unwrap();
        let s = QuantumState::basis(l, 0, &[Down]).unwrap();
        let ev = [
            ProtocolEvent::new(0.0, EventKind::Ramsey { atom: 0, setting: RamseySetting::new(FRAC_PI_2, PI) }),
            ProtocolEvent::new(0.0, EventKind::Measure { atom: 0 }),
        ];
        let dist = outcome_distribution(&ev, &params(), &s, &Tolerances::default()).unwrap();
        assert_eq!(dist.branches.len(), 2);
        assert!((dist.probability(&[Up]) - 0.5).abs() < 1e-15);
        assert!((dist.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn certain_branch_prunes_impossible_outcome() {
        let l = HilbertLayout::new(2, 1).unwrap();
        let s = QuantumState::basis(l, 0, &[Down]).unwrap();
        let ev = [ProtocolEvent::new(0.0, EventKind::Measure { atom: 0 })];
        let dist = outcome_distribution(&ev, &params(), &s, &Tolerances::default()).unwrap();
        assert_eq!(dist.branches.len(), 1);
        assert_eq!(dist.branches[0].outcomes, [Down]);
    }
}
