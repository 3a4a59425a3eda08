//! Primitive maps on [`QuantumState`].
//!
//! Frame convention: the resonant atom-cavity crossing is the
//! interaction-picture Jaynes-Cummings evolution
//!
//! ```text
//! |↑,n⟩ → cos(g√(n+1)t)|↑,n⟩ − sin(g√(n+1)t)|↓,n+1⟩
//! |↓,n⟩ → cos(g√n t)|↓,n⟩ + sin(g√n t)|↑,n−1⟩
//! ```
//!
//! and every ω-dependent phase comes from [`free_evolve`] applied in the gaps
//! between zones. Free evolution puts `e^{−inωt}` on `|n⟩` and `e^{−iωt}` on an
//! atom's `|↑⟩`, leaving `|↓⟩` unphased.

#[allow(unused_imports)]
use num_traits::Float;

use crate::fockspace::{Level, QuantumState, Subsystems};
use crate::rng::RngStream;
use crate::{Error, Result, C64, NORM_TOL};

/// Sampled branches below this probability are rejected as degenerate.
pub const DEGENERATE_BRANCH: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PhysicalParams {
    /// Atom-field coupling constant (rad/s).
    pub g: f64,
    /// Resonant mode angular frequency (rad/s).
    pub omega: f64,
}

impl PhysicalParams {
    pub fn new(g: f64, omega: f64) -> Result<Self> {
        let params = PhysicalParams { g, omega };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::parameter("g", "must be positive and finite"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::parameter("omega", "must be positive and finite"));
        }
        Ok(())
    }

    /// Duration corresponding to the dimensionless pulse area `g·t`.
    pub fn duration_for(&self, gt: f64) -> f64 {
        gt / self.g
    }
}

/// Ramsey zone setting: pulse angle θ and phase φ.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RamseySetting {
    pub theta: f64,
    pub phi: f64,
}

impl RamseySetting {
    pub fn new(theta: f64, phi: f64) -> Self {
        RamseySetting { theta, phi }
    }

    /// θ with `cos(θ/2) = √p` and `sin(θ/2) = √(1−p)`.
    pub fn from_probability(p: f64, phi: f64) -> Self {
        RamseySetting { theta: 2.0 * p.clamp(0.0, 1.0).sqrt().acos(), phi }
    }

    /// Rotation axis `u = (−sinθ cosφ, −sinθ sinφ, cosθ)`.
    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [-st * cp, -st * sp, ct]
    }

    /// 2×2 matrix in the `(↓, ↑)` basis, `m[out][in]`.
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [[C64::new(c, 0.0), C64::from_polar(-s, self.phi)], [C64::from_polar(s, -self.phi), C64::new(c, 0.0)]]
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if duration >= 0.0 && duration.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter("duration", alloc::format!("{duration} is not a finite non-negative time")))
    }
}

/// Resonant crossing of atom `atom` through the cavity for `duration` seconds.
pub fn jc_evolve(state: &QuantumState, atom: usize, params: &PhysicalParams, duration: f64) -> Result<QuantumState> {
    jc_evolve_with_tolerance(state, atom, params, duration, NORM_TOL)
}

/// [`jc_evolve`] with an explicit bound on the excited-atom population allowed
/// at the top Fock level, which the truncation cannot propagate.
pub fn jc_evolve_with_tolerance(
    state: &QuantumState,
    atom: usize,
    params: &PhysicalParams,
    duration: f64,
    leak_tol: f64,
) -> Result<QuantumState> {
    let layout = *state.layout();
    layout.check_atom(atom)?;
    params.validate()?;
    check_duration(duration)?;

    let cutoff = layout.fock_cutoff();
    let dim = layout.atom_dim();
    let mask = 1usize << atom;
    let amps = state.amplitudes();

    let stuck: f64 = (0..dim).filter(|bits| bits & mask != 0).map(|bits| amps[cutoff * dim + bits].norm_sqr()).sum();
    if stuck > leak_tol {
        return Err(Error::Leakage { population: stuck, cutoff });
    }

    let gt = params.g * duration;
    let mut out = amps.to_vec();
    for n in 0..cutoff {
        let (s, c) = ((n as f64 + 1.0).sqrt() * gt).sin_cos();
        for bits in (0..dim).filter(|bits| bits & mask != 0) {
            let up = n * dim + bits;
            let down = (n + 1) * dim + (bits & !mask);
            let (a_up, a_down) = (amps[up], amps[down]);
            out[up] = a_up * c + a_down * s;
            out[down] = a_down * c - a_up * s;
        }
    }
    Ok(QuantumState::from_raw(layout, out))
}

/// Applies the Ramsey rotation to one atom.
pub fn ramsey_rotate(state: &QuantumState, atom: usize, setting: &RamseySetting) -> Result<QuantumState> {
    let layout = *state.layout();
    layout.check_atom(atom)?;
    let m = setting.matrix();
    let mask = 1usize << atom;
    let amps = state.amplitudes();
    let mut out = amps.to_vec();
    for low in (0..amps.len()).filter(|i| i & mask == 0) {
        let high = low | mask;
        let (d, u) = (amps[low], amps[high]);
        out[low] = m[0][0] * d + m[0][1] * u;
        out[high] = m[1][0] * d + m[1][1] * u;
    }
    Ok(QuantumState::from_raw(layout, out))
}

/// Free evolution of the selected subsystems for `duration` seconds.
pub fn free_evolve(state: &QuantumState, params: &PhysicalParams, duration: f64, acted_on: &Subsystems) -> Result<QuantumState> {
    acted_on.check(state.layout())?;
    params.validate()?;
    check_duration(duration)?;
    let layout = *state.layout();
    let wt = params.omega * duration;
    let atoms = acted_on.atoms as usize;
    Ok(state.map_phases(|i| {
        let (n, bits) = layout.split(i);
        let quanta = if acted_on.cavity { n } else { 0 } + (bits & atoms).count_ones() as usize;
        C64::from_polar(1.0, -(quanta as f64) * wt)
    }))
}

/// `(P_up, P_down)` for one atom.
pub fn branch_probabilities(state: &QuantumState, atom: usize) -> Result<(f64, f64)> {
    let up = state.excitation(atom)?;
    let total = state.norm().powi(2);
    Ok((up, (total - up).max(0.0)))
}

/// Projects atom `atom` onto `level` and renormalizes. Returns the collapsed
/// state with the branch probability.
pub fn project_atom(state: &QuantumState, atom: usize, level: Level) -> Result<(QuantumState, f64)> {
    let layout = *state.layout();
    layout.check_atom(atom)?;
    let want = level.bit();
    let mut probability = 0.0;
    let mut out: alloc::vec::Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if (i >> atom) & 1 == want {
                probability += a.norm_sqr();
                *a
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    if probability < DEGENERATE_BRANCH {
        return Err(Error::DegenerateBranch(probability));
    }
    let scale = 1.0 / probability.sqrt();
    out.iter_mut().for_each(|a| *a *= scale);
    Ok((QuantumState::from_raw(layout, out), probability))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: Level,
    pub collapsed: QuantumState,
    pub probability: f64,
}

/// Born-rule projective measurement of one atom in the `{↑, ↓}` basis.
pub fn measure_atom(state: &QuantumState, atom: usize, rng: &mut RngStream) -> Result<Measurement> {
    let (p_up, _) = branch_probabilities(state, atom)?;
    let outcome = if rng.uniform() < p_up { Level::Up } else { Level::Down };
    let (collapsed, probability) = project_atom(state, atom, outcome)?;
    Ok(Measurement { outcome, collapsed, probability })
}
