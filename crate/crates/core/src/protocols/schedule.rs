//! Generation, distinction and coherence setups.
//!
//! Each setup has a nominal schedule (physical inputs such as `p`, φ and flight
//! gaps) and realized timings (the durations the atoms actually spend in each
//! segment). Ramsey phases are always derived from the realized timings, the
//! way an experiment sets its zones from measured times of flight; only the
//! interaction times are left uncompensated when they deviate from nominal.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)]
use num_traits::Float;

use super::{EventKind, ProtocolEvent};
use crate::dynamics::{PhysicalParams, RamseySetting};
use crate::fockspace::{HilbertLayout, Level, QuantumState, Subsystems};
use crate::states::{binomial_state, BinomialSpec, CatSpec};
use crate::{Error, Result, C64};

/// Constant added to `ω(t_R2 − t_R1 − T₁)` to get the relative phase γ of the
/// generated cat. Composing the crossing and Ramsey maps with the sign
/// conventions of [`crate::dynamics`] leaves an extra factor `−1` on the
/// second component.
pub const GENERATION_GAMMA_OFFSET: f64 = PI;

/// `(4m+1)π/2`, the pulse area that fully swaps `|↑,0⟩ ↔ |↓,1⟩`.
pub fn swap_pulse_area(m: u32) -> f64 {
    (4 * m + 1) as f64 * FRAC_PI_2
}

/// `41π/4`: approximately satisfies `sin(gT+π/4) = 1` and `sin(√2 gT) = 1`.
pub const TWO_PHOTON_PULSE_AREA: f64 = 41.0 * PI / 4.0;

fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(name, alloc::format!("{value} must be finite and non-negative")))
    }
}

fn probability(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::parameter("p", alloc::format!("{value} is outside [0, 1]")))
    }
}

/// Atoms addressed by a two-atom setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AtomPair {
    pub first: usize,
    pub second: usize,
}

impl Default for AtomPair {
    fn default() -> Self {
        AtomPair { first: 0, second: 1 }
    }
}

/// Flight-based description of the generation setup.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GenerationFlight {
    /// Atom velocities (m/s).
    pub v1: f64,
    pub v2: f64,
    /// Distance from the preparing Ramsey zone to the cavity (m).
    pub ramsey_to_cavity: f64,
    /// Separation time T₀ between the two atoms at the Ramsey zone (s).
    pub separation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GenerationSchedule {
    pub p: f64,
    /// Phase φ₁ of the first Ramsey pulse.
    pub varphi1: f64,
    /// Real weight η₀ of the entangled input pair.
    pub eta0: f64,
    /// Selects `T₁ = (4m+1)π/2g`.
    pub m: u32,
    /// Flight time τ₁ from the Ramsey zone to the cavity for atom 1.
    pub tau1: f64,
    /// Flight time τ₂ for atom 2.
    pub tau2: f64,
    /// Separation T₀ between the Ramsey pulses of the two atoms.
    pub separation: f64,
    pub params: PhysicalParams,
}

/// Realized durations of the generation sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenerationTimings {
    pub tau1: f64,
    pub interaction1: f64,
    pub separation: f64,
    pub tau2: f64,
    pub interaction2: f64,
}

impl GenerationTimings {
    /// Free cavity time T between atom 1 leaving and atom 2 entering.
    pub fn gap(&self) -> f64 {
        self.separation - self.tau1 - self.interaction1 + self.tau2
    }

    /// Ramsey pulse instants `(t_R1, t_R2)`.
    pub fn ramsey_times(&self) -> (f64, f64) {
        (0.0, self.separation)
    }

    pub fn total(&self) -> f64 {
        self.separation + self.tau2 + self.interaction2
    }

    /// Durations of atom 1 scaled by `f1` and of atom 2 by `f2`; the clock
    /// separation T₀ is unchanged.
    pub fn scaled(&self, f1: f64, f2: f64) -> Self {
        GenerationTimings {
            tau1: self.tau1 * f1,
            interaction1: self.interaction1 * f1,
            separation: self.separation,
            tau2: self.tau2 * f2,
            interaction2: self.interaction2 * f2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("tau1", self.tau1)?;
        non_negative("tau2", self.tau2)?;
        non_negative("interaction1", self.interaction1)?;
        non_negative("interaction2", self.interaction2)?;
        non_negative("separation", self.separation)?;
        if self.separation < self.tau1 + self.interaction1 {
            return Err(Error::Schedule(alloc::format!(
                "separation T0 = {:e} s is shorter than the atom-1 transit {:e} s; both atoms would be in the apparatus",
                self.separation,
                self.tau1 + self.interaction1
            )));
        }
        Ok(())
    }
}

impl GenerationSchedule {
    pub fn from_flight(p: f64, varphi1: f64, eta0: f64, m: u32, flight: &GenerationFlight, params: PhysicalParams) -> Result<Self> {
        if !(flight.v1 > 0.0 && flight.v2 > 0.0) {
            return Err(Error::parameter("velocity", "velocities must be positive"));
        }
        non_negative("ramsey_to_cavity", flight.ramsey_to_cavity)?;
        let schedule = GenerationSchedule {
            p,
            varphi1,
            eta0,
            m,
            tau1: flight.ramsey_to_cavity / flight.v1,
            tau2: flight.ramsey_to_cavity / flight.v2,
            separation: flight.separation,
            params,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        probability(self.p)?;
        self.params.validate()?;
        if !self.varphi1.is_finite() {
            return Err(Error::parameter("varphi1", "must be finite"));
        }
        if !self.eta0.is_finite() {
            return Err(Error::parameter("eta0", "must be finite"));
        }
        self.timings().validate()
    }

    /// `T₁ = (4m+1)π/2g`.
    pub fn interaction1(&self) -> f64 {
        self.params.duration_for(swap_pulse_area(self.m))
    }

    /// `T₂ = 41π/4g`.
    pub fn interaction2(&self) -> f64 {
        self.params.duration_for(TWO_PHOTON_PULSE_AREA)
    }

    pub fn timings(&self) -> GenerationTimings {
        GenerationTimings {
            tau1: self.tau1,
            interaction1: self.interaction1(),
            separation: self.separation,
            tau2: self.tau2,
            interaction2: self.interaction2(),
        }
    }

    /// Atom 1: `cos(θ₁/2) = √p`, phase φ₁.
    pub fn ramsey1(&self) -> RamseySetting {
        RamseySetting::from_probability(self.p, self.varphi1)
    }

    /// Atom 2: `θ₂ = θ₁ + π`, `φ₂ = φ₁ + ω(τ₁ + T − τ₂)`.
    pub fn ramsey2(&self, timings: &GenerationTimings) -> RamseySetting {
        let first = self.ramsey1();
        let w = self.params.omega;
        RamseySetting::new(first.theta + PI, self.varphi1 + w * (timings.tau1 + timings.gap() - timings.tau2))
    }

    /// `ω(t_R2 − t_R1 − T₁)`.
    pub fn gamma_closed_form(&self, timings: &GenerationTimings) -> f64 {
        let (r1, r2) = timings.ramsey_times();
        self.params.omega * (r2 - r1 - timings.interaction1)
    }

    /// Mean phase `φ = −[φ₁ + ω(τ₁ + T)]` and relative phase γ of the output cat.
    pub fn output_phases(&self, timings: &GenerationTimings) -> (f64, f64) {
        let phi = -(self.varphi1 + self.params.omega * (timings.tau1 + timings.gap()));
        (phi, self.gamma_closed_form(timings) + GENERATION_GAMMA_OFFSET)
    }

    /// Smallest layout that hosts the sequence.
    pub fn layout(&self, fock_cutoff: usize) -> Result<HilbertLayout> {
        HilbertLayout::new(fock_cutoff, 2)
    }

    /// `|↓↓, 0⟩`; the entangling event prepares the atom pair from it.
    pub fn initial_state(&self, fock_cutoff: usize) -> Result<QuantumState> {
        QuantumState::basis(self.layout(fock_cutoff)?, 0, &[Level::Down, Level::Down])
    }
}

/// Events of the generation setup with nominal timings on atoms 0 and 1.
pub fn build_generation(schedule: &GenerationSchedule) -> Result<Vec<ProtocolEvent>> {
    build_generation_with(schedule, &schedule.timings(), AtomPair::default())
}

/// Entangle the pair, then for each atom: preparing Ramsey pulse, flight to
/// the cavity, resonant crossing. Atom 2 is held until its Ramsey pulse.
pub fn build_generation_with(schedule: &GenerationSchedule, timings: &GenerationTimings, atoms: AtomPair) -> Result<Vec<ProtocolEvent>> {
    schedule.validate()?;
    timings.validate()?;
    let AtomPair { first: a, second: b } = atoms;
    let t = timings;
    let cav_a = Subsystems::cavity().with_atom(a);
    let exit1 = t.tau1 + t.interaction1;
    Ok(vec![
        ProtocolEvent::new(0.0, EventKind::Entangle { first: a, second: b, eta0: schedule.eta0 }),
        ProtocolEvent::new(0.0, EventKind::Ramsey { atom: a, setting: schedule.ramsey1() }),
        ProtocolEvent::new(0.0, EventKind::Free { duration: t.tau1, acted_on: cav_a }),
        ProtocolEvent::new(t.tau1, EventKind::Cavity { atom: a, duration: t.interaction1 }),
        ProtocolEvent::new(exit1, EventKind::Free { duration: t.separation - exit1, acted_on: cav_a }),
        ProtocolEvent::new(t.separation, EventKind::Ramsey { atom: b, setting: schedule.ramsey2(t) }),
        ProtocolEvent::new(t.separation, EventKind::Free { duration: t.tau2, acted_on: cav_a.with_atom(b) }),
        ProtocolEvent::new(t.separation + t.tau2, EventKind::Cavity { atom: b, duration: t.interaction2 }),
    ])
}

/// Cat the generation setup should leave in the cavity:
/// `N = 2`, `p`, `φ = −[φ₁ + ω(τ₁+T)]`, `η = η₀ e^{iγ}`.
pub fn generation_target(schedule: &GenerationSchedule) -> Result<CatSpec> {
    generation_target_with(schedule, &schedule.timings())
}

pub fn generation_target_with(schedule: &GenerationSchedule, timings: &GenerationTimings) -> Result<CatSpec> {
    schedule.validate()?;
    let (phi, gamma) = schedule.output_phases(timings);
    Ok(CatSpec { base: BinomialSpec::new(2, schedule.p, phi)?, eta: C64::from_polar(schedule.eta0, gamma) })
}

/// Relative phase γ recovered from a simulated cavity state, compared with
/// the closed form `ω(t_R2 − t_R1 − T₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GammaFit {
    pub fitted: f64,
    pub closed_form: f64,
    /// `fitted − closed_form` wrapped to `(−π, π]`.
    pub offset: f64,
}

/// Projects `field` onto the two expected components and reads off γ from the
/// ratio of their amplitudes. `None` when a component has no weight.
pub fn fit_gamma(field: &QuantumState, schedule: &GenerationSchedule, timings: &GenerationTimings) -> Result<Option<GammaFit>> {
    let (phi, _) = schedule.output_phases(timings);
    let cutoff = field.layout().fock_cutoff();
    let base = BinomialSpec::new(2, schedule.p, phi)?;
    let a = binomial_state(cutoff, &base)?.inner(field)?;
    let b = binomial_state(cutoff, &base.complement())?.inner(field)?;
    if a.norm() < 1e-9 || b.norm() < 1e-9 || schedule.eta0 == 0.0 {
        return Ok(None);
    }
    let fitted = (b / (a * schedule.eta0)).arg();
    let closed_form = schedule.gamma_closed_form(timings);
    Ok(Some(GammaFit { fitted, closed_form, offset: wrap_phase(fitted - closed_form) }))
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).floor();
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Flight-based description of the probe atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DetectionFlight {
    pub v1: f64,
    pub v2: f64,
    /// Cavity → decoding zone (m).
    pub cavity_to_decoder: f64,
    /// Decoding zone → coherence zone (m); ignored by the distinction setup.
    #[cfg_attr(feature = "serde", serde(default))]
    pub decoder_to_coherence: f64,
    /// Time T′ between atom 1 leaving the cavity and atom 2 entering it (s).
    pub t_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DistinctionSchedule {
    /// `p` and φ of the cat components to discriminate.
    pub p: f64,
    pub phi: f64,
    /// Selects `T_P2 = (4m+1)π/2g`.
    pub m: u32,
    /// Cavity → decoding zone for probe 1.
    pub t1: f64,
    /// Cavity → decoding zone for probe 2.
    pub t2: f64,
    /// Free cavity time T′ between the two probes.
    pub t_prime: f64,
    pub params: PhysicalParams,
}

/// Realized durations of a detection sequence. `t1p`/`t2p` are zero for the
/// distinction setup.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionTimings {
    pub interaction1: f64,
    pub t1: f64,
    pub t1p: f64,
    pub t_prime: f64,
    pub interaction2: f64,
    pub t2: f64,
    pub t2p: f64,
}

impl DetectionTimings {
    /// Probe 1 durations scaled by `f1` and probe 2 by `f2`; T′ is a clock
    /// interval and stays fixed.
    pub fn scaled(&self, f1: f64, f2: f64) -> Self {
        DetectionTimings {
            interaction1: self.interaction1 * f1,
            t1: self.t1 * f1,
            t1p: self.t1p * f1,
            t_prime: self.t_prime,
            interaction2: self.interaction2 * f2,
            t2: self.t2 * f2,
            t2p: self.t2p * f2,
        }
    }

    /// `τ = T′ + t₁ + t′₁ + t₂ + t′₂`.
    pub fn tau(&self) -> f64 {
        self.t_prime + self.t1 + self.t1p + self.t2 + self.t2p
    }

    pub fn total(&self) -> f64 {
        self.interaction1 + self.t_prime + self.interaction2 + self.t2 + self.t2p
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("interaction1", self.interaction1),
            ("t1", self.t1),
            ("t1p", self.t1p),
            ("t_prime", self.t_prime),
            ("interaction2", self.interaction2),
            ("t2", self.t2),
            ("t2p", self.t2p),
        ] {
            non_negative(name, v)?;
        }
        if self.t_prime < self.t1 + self.t1p {
            return Err(Error::Schedule(alloc::format!(
                "T' = {:e} s is shorter than probe 1's flight to its last zone ({:e} s)",
                self.t_prime,
                self.t1 + self.t1p
            )));
        }
        Ok(())
    }
}

impl DistinctionSchedule {
    pub fn from_flight(p: f64, phi: f64, m: u32, flight: &DetectionFlight, params: PhysicalParams) -> Result<Self> {
        if !(flight.v1 > 0.0 && flight.v2 > 0.0) {
            return Err(Error::parameter("velocity", "velocities must be positive"));
        }
        non_negative("cavity_to_decoder", flight.cavity_to_decoder)?;
        let schedule = DistinctionSchedule {
            p,
            phi,
            m,
            t1: flight.cavity_to_decoder / flight.v1,
            t2: flight.cavity_to_decoder / flight.v2,
            t_prime: flight.t_prime,
            params,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        probability(self.p)?;
        self.params.validate()?;
        if !self.phi.is_finite() {
            return Err(Error::parameter("phi", "must be finite"));
        }
        self.timings().validate()
    }

    /// `T_P1 = 41π/4g`.
    pub fn interaction1(&self) -> f64 {
        self.params.duration_for(TWO_PHOTON_PULSE_AREA)
    }

    /// `T_P2 = (4m+1)π/2g`.
    pub fn interaction2(&self) -> f64 {
        self.params.duration_for(swap_pulse_area(self.m))
    }

    pub fn timings(&self) -> DetectionTimings {
        DetectionTimings {
            interaction1: self.interaction1(),
            t1: self.t1,
            t1p: 0.0,
            t_prime: self.t_prime,
            interaction2: self.interaction2(),
            t2: self.t2,
            t2p: 0.0,
        }
    }

    /// `cos(θ_d1/2) = √p`, `φ_d1 = −φ + ωt₁`.
    pub fn decoder1(&self, timings: &DetectionTimings) -> RamseySetting {
        RamseySetting::from_probability(self.p, -self.phi + self.params.omega * timings.t1)
    }

    /// `θ_d2 = θ_d1`, `φ_d2 = −φ + ω(T′ + t₂)`.
    pub fn decoder2(&self, timings: &DetectionTimings) -> RamseySetting {
        RamseySetting::from_probability(self.p, -self.phi + self.params.omega * (timings.t_prime + timings.t2))
    }

    /// The component probes flip on, `|2, p, φ⟩`.
    pub fn excited_component(&self) -> Result<BinomialSpec> {
        BinomialSpec::new(2, self.p, self.phi)
    }
}

/// Events of the distinction setup with nominal timings on atoms 0 and 1.
pub fn build_distinction(schedule: &DistinctionSchedule) -> Result<Vec<ProtocolEvent>> {
    schedule.validate()?;
    Ok(detection_events(schedule, &schedule.timings(), None, AtomPair::default()))
}

pub fn build_distinction_with(schedule: &DistinctionSchedule, timings: &DetectionTimings, atoms: AtomPair) -> Result<Vec<ProtocolEvent>> {
    schedule.validate()?;
    timings.validate()?;
    Ok(detection_events(schedule, timings, None, atoms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CoherenceSchedule {
    pub detection: DistinctionSchedule,
    /// Decoding zone → coherence zone, probe 1 and probe 2.
    pub t1p: f64,
    pub t2p: f64,
    /// Relative phase γ of the cat under test.
    pub gamma: f64,
}

impl CoherenceSchedule {
    pub fn from_flight(p: f64, phi: f64, gamma: f64, m: u32, flight: &DetectionFlight, params: PhysicalParams) -> Result<Self> {
        if !(flight.v1 > 0.0 && flight.v2 > 0.0) {
            return Err(Error::parameter("velocity", "velocities must be positive"));
        }
        non_negative("cavity_to_decoder", flight.cavity_to_decoder)?;
        non_negative("decoder_to_coherence", flight.decoder_to_coherence)?;
        let schedule = CoherenceSchedule {
            detection: DistinctionSchedule {
                p,
                phi,
                m,
                t1: flight.cavity_to_decoder / flight.v1,
                t2: flight.cavity_to_decoder / flight.v2,
                t_prime: flight.t_prime,
                params,
            },
            t1p: flight.decoder_to_coherence / flight.v1,
            t2p: flight.decoder_to_coherence / flight.v2,
            gamma,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.detection;
        probability(d.p)?;
        d.params.validate()?;
        if !(d.phi.is_finite() && self.gamma.is_finite()) {
            return Err(Error::parameter("gamma", "phases must be finite"));
        }
        self.timings().validate()
    }

    pub fn timings(&self) -> DetectionTimings {
        DetectionTimings { t1p: self.t1p, t2p: self.t2p, ..self.detection.timings() }
    }

    /// `θ_c = π/2`, `φ_c = (γ − 2φ + ωτ)/2`.
    pub fn coherence_zone(&self, timings: &DetectionTimings) -> RamseySetting {
        let d = &self.detection;
        RamseySetting::new(FRAC_PI_2, 0.5 * (self.gamma - 2.0 * d.phi + d.params.omega * timings.tau()))
    }
}

/// Events of the coherence setup with nominal timings on atoms 0 and 1.
pub fn build_coherence(schedule: &CoherenceSchedule) -> Result<Vec<ProtocolEvent>> {
    build_coherence_with(schedule, &schedule.timings(), AtomPair::default())
}

pub fn build_coherence_with(schedule: &CoherenceSchedule, timings: &DetectionTimings, atoms: AtomPair) -> Result<Vec<ProtocolEvent>> {
    schedule.validate()?;
    timings.validate()?;
    let zone = schedule.coherence_zone(timings);
    Ok(detection_events(&schedule.detection, timings, Some(zone), atoms))
}

/// Probe sequence shared by the distinction and coherence setups. With a
/// coherence zone, each probe flies on to it after the decoding zone and is
/// measured after it; otherwise it is measured right after decoding.
fn detection_events(
    schedule: &DistinctionSchedule,
    t: &DetectionTimings,
    coherence: Option<RamseySetting>,
    atoms: AtomPair,
) -> Vec<ProtocolEvent> {
    let AtomPair { first: a, second: b } = atoms;
    let cav = Subsystems::cavity();
    let mut events = Vec::with_capacity(13);
    let mut now = 0.0;
    let push = |events: &mut Vec<ProtocolEvent>, now: &mut f64, kind: EventKind| {
        let e = ProtocolEvent::new(*now, kind);
        *now += e.duration();
        events.push(e);
    };

    // probe 1
    push(&mut events, &mut now, EventKind::Cavity { atom: a, duration: t.interaction1 });
    let exit1 = now;
    push(&mut events, &mut now, EventKind::Free { duration: t.t1, acted_on: cav.with_atom(a) });
    push(&mut events, &mut now, EventKind::Ramsey { atom: a, setting: schedule.decoder1(t) });
    let mut flown = t.t1;
    if let Some(zone) = coherence {
        push(&mut events, &mut now, EventKind::Free { duration: t.t1p, acted_on: cav.with_atom(a) });
        push(&mut events, &mut now, EventKind::Ramsey { atom: a, setting: zone });
        flown += t.t1p;
    }
    push(&mut events, &mut now, EventKind::Measure { atom: a });
    push(&mut events, &mut now, EventKind::Free { duration: t.t_prime - flown, acted_on: cav });
    debug_assert!((now - (exit1 + t.t_prime)).abs() <= 1e-9 * now.abs().max(1.0));

    // probe 2
    push(&mut events, &mut now, EventKind::Cavity { atom: b, duration: t.interaction2 });
    push(&mut events, &mut now, EventKind::Free { duration: t.t2, acted_on: cav.with_atom(b) });
    push(&mut events, &mut now, EventKind::Ramsey { atom: b, setting: schedule.decoder2(t) });
    if let Some(zone) = coherence {
        push(&mut events, &mut now, EventKind::Free { duration: t.t2p, acted_on: cav.with_atom(b) });
        push(&mut events, &mut now, EventKind::Ramsey { atom: b, setting: zone });
    }
    push(&mut events, &mut now, EventKind::Measure { atom: b });
    events
}

/// Generation on atoms 0 and 1, a free delay, then coherence detection with
/// probes 2 and 3 set up for the cat the generation stage produces.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FullPipeline {
    pub generation: GenerationSchedule,
    /// Probe timing inputs; `p`, `phi` and `gamma` are overwritten from the
    /// generation target.
    pub probes: CoherenceSchedule,
    /// Free cavity time between atom 2 leaving and probe 1 entering (s).
    pub delay: f64,
}

impl FullPipeline {
    pub fn new(generation: GenerationSchedule, probes: CoherenceSchedule, delay: f64) -> Result<Self> {
        non_negative("delay", delay)?;
        let pipeline = FullPipeline { generation, probes, delay };
        pipeline.coherence_schedule(&generation.timings())?;
        Ok(pipeline)
    }

    /// Coherence setup matched to the cat produced by `timings`, evolved
    /// freely through the delay.
    pub fn coherence_schedule(&self, timings: &GenerationTimings) -> Result<CoherenceSchedule> {
        self.generation.validate()?;
        let (phi, gamma) = self.generation.output_phases(timings);
        let mut coherence = self.probes;
        coherence.detection.p = self.generation.p;
        coherence.detection.phi = phi - self.generation.params.omega * self.delay;
        coherence.detection.params = self.generation.params;
        coherence.gamma = gamma;
        coherence.validate()?;
        Ok(coherence)
    }

    pub fn layout(&self, fock_cutoff: usize) -> Result<HilbertLayout> {
        HilbertLayout::new(fock_cutoff, 4)
    }

    pub fn initial_state(&self, fock_cutoff: usize) -> Result<QuantumState> {
        QuantumState::basis(self.layout(fock_cutoff)?, 0, &[Level::Down; 4])
    }

    pub fn build(&self) -> Result<Vec<ProtocolEvent>> {
        self.build_with(&self.generation.timings(), None)
    }

    /// Events with realized generation timings and optionally realized probe
    /// timings (nominal when `None`).
    pub fn build_with(&self, generation: &GenerationTimings, probes: Option<&DetectionTimings>) -> Result<Vec<ProtocolEvent>> {
        let mut events = build_generation_with(&self.generation, generation, AtomPair { first: 0, second: 1 })?;
        let coherence = self.coherence_schedule(generation)?;
        let start = generation.total();
        events.push(ProtocolEvent::new(start, EventKind::Free { duration: self.delay, acted_on: Subsystems::cavity() }));
        let probe_timings = probes.copied().unwrap_or_else(|| coherence.timings());
        let detection = build_coherence_with(&coherence, &probe_timings, AtomPair { first: 2, second: 3 })?;
        events.extend(detection.into_iter().map(|e| ProtocolEvent::new(e.start + start + self.delay, e.kind)));
        Ok(events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysicalParams {
        PhysicalParams::new(1.0, 40.0).unwrap()
    }

    fn generation() -> GenerationSchedule {
        GenerationSchedule { p: 0.5, varphi1: 0.0, eta0: 1.0, m: 0, tau1: 1.0, tau2: 1.5, separation: 6.0, params: params() }
    }

    #[test]
    fn generation_schedule_has_eight_events() {
        let s = generation();
        let ev = build_generation(&s).unwrap();
        assert_eq!(ev.len(), 8);
        assert!((s.interaction1() - FRAC_PI_2).abs() < 1e-15);
        assert!((s.interaction2() - 41.0 * PI / 4.0).abs() < 1e-15);
        assert!(matches!(ev[3].kind, EventKind::Cavity { atom: 0, duration } if duration == s.interaction1()));
        assert!(matches!(ev[7].kind, EventKind::Cavity { atom: 1, duration } if duration == s.interaction2()));
    }

    #[test]
    fn derived_ramsey_settings() {
        let s = GenerationSchedule { p: 0.3, varphi1: 0.4, ..generation() };
        let r1 = s.ramsey1();
        assert!(((0.5 * r1.theta).cos() - 0.3f64.sqrt()).abs() < 1e-15);
        assert!(((0.5 * r1.theta).sin() - 0.7f64.sqrt()).abs() < 1e-15);
        let t = s.timings();
        let r2 = s.ramsey2(&t);
        assert!(((0.5 * r2.theta).cos() + 0.7f64.sqrt()).abs() < 1e-15);
        assert!(((0.5 * r2.theta).sin() - 0.3f64.sqrt()).abs() < 1e-15);
        assert!((r2.phi - (0.4 + 40.0 * (t.tau1 + t.gap() - t.tau2))).abs() < 1e-12);
        assert!((t.gap() - (6.0 - 1.0 - FRAC_PI_2 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn separation_shorter_than_transit_is_rejected() {
        let s = GenerationSchedule { separation: 2.0, ..generation() };
        assert!(matches!(build_generation(&s), Err(Error::Schedule(_))));
    }

    #[test]
    fn vacuum_limit_is_still_valid() {
        let s = GenerationSchedule { p: 0.0, ..generation() };
        assert_eq!(build_generation(&s).unwrap().len(), 8);
    }

    #[test]
    fn target_phase_formulas() {
        let s = GenerationSchedule { tau1: 0.0, separation: FRAC_PI_2, varphi1: 0.0, ..generation() };
        // gap T = tau2 here, so ω(τ₁+T) = 40 · 1.5
        let (phi, _) = s.output_phases(&s.timings());
        assert!((phi + 60.0).abs() < 1e-12);

        let w = 1.0;
        let s = GenerationSchedule {
            tau1: 0.0,
            tau2: 0.0,
            separation: FRAC_PI_2 + PI / 4.0,
            varphi1: PI / 4.0,
            params: PhysicalParams::new(1.0, w).unwrap(),
            ..generation()
        };
        let t = s.timings();
        assert!((w * (t.tau1 + t.gap()) - PI / 4.0).abs() < 1e-15);
        let cat = generation_target(&s).unwrap();
        assert!((cat.base.phi + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn velocity_mode_derives_durations() {
        let flight = GenerationFlight { v1: 250.0, v2: 200.0, ramsey_to_cavity: 0.05, separation: 1e-3 };
        let p = PhysicalParams::new(2.0 * PI * 25e3, 2.0 * PI * 51.1e9).unwrap();
        let s = GenerationSchedule::from_flight(0.5, 0.0, 1.0, 0, &flight, p).unwrap();
        assert!((s.tau1 - 0.05 / 250.0).abs() < 1e-18);
        assert!((s.tau2 - 0.05 / 200.0).abs() < 1e-18);
    }

    #[test]
    fn detection_schedules() {
        let d = DistinctionSchedule { p: 0.4, phi: 0.3, m: 0, t1: 1.0, t2: 2.0, t_prime: 3.0, params: params() };
        let ev = build_distinction(&d).unwrap();
        assert_eq!(ev.len(), 9);
        let t = d.timings();
        assert!((d.decoder1(&t).phi - (-0.3 + 40.0)).abs() < 1e-12);
        assert!((d.decoder2(&t).phi - (-0.3 + 200.0)).abs() < 1e-12);
        assert!(build_distinction(&DistinctionSchedule { t_prime: 0.5, ..d }).is_err());

        let c = CoherenceSchedule { detection: d, t1p: 1.5, t2p: 0.5, gamma: 0.2 };
        let ev = build_coherence(&c).unwrap();
        assert_eq!(ev.len(), 13);
        let zone = c.coherence_zone(&c.timings());
        assert_eq!(zone.theta, FRAC_PI_2);
        assert!((zone.phi - 0.5 * (0.2 - 0.6 + 40.0 * 8.0)).abs() < 1e-12);
        assert!(build_coherence(&CoherenceSchedule { t1p: 2.5, ..c }).is_err());
    }

    #[test]
    fn wrap_phase_range() {
        for x in [-7.0, -PI, 0.0, PI, 3.5, 100.0] {
            let y = wrap_phase(x);
            assert!(y > -PI && y <= PI);
            assert!(((x - y) / (2.0 * PI) - ((x - y) / (2.0 * PI)).round()).abs() < 1e-12);
        }
    }
}
