//! Generalized binomial states `|N, p, φ⟩` and binomial Schrödinger cats.
//!
//! `|N,p,φ⟩ = Σ_n [C(N,n) pⁿ (1−p)^(N−n)]^½ e^{inφ} |n⟩`. Two binomial states
//! with the same `N` and parameters `(p, φ)`, `(1−p, π+φ)` are orthogonal; a
//! cat is their superposition with complex weight η.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::fockspace::{DensityMatrix, HilbertLayout, QuantumState};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinomialSpec {
    /// Maximum photon number `N`.
    pub n_max: usize,
    /// Single-photon probability `p ∈ [0, 1]`.
    pub p: f64,
    /// Mean phase φ in radians.
    pub phi: f64,
}

impl BinomialSpec {
    pub fn new(n_max: usize, p: f64, phi: f64) -> Result<Self> {
        let spec = BinomialSpec { n_max, p, phi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::parameter("p", alloc::format!("{} is outside [0, 1]", self.p)));
        }
        if !self.phi.is_finite() {
            return Err(Error::parameter("phi", "must be finite"));
        }
        Ok(())
    }

    /// The orthogonal partner `(N, 1−p, π+φ)`.
    pub fn complement(&self) -> Self {
        BinomialSpec { n_max: self.n_max, p: 1.0 - self.p, phi: PI + self.phi }
    }

    /// Same state after free field evolution for `ω·t = phase`.
    pub fn shifted(&self, phase: f64) -> Self {
        BinomialSpec { phi: self.phi - phase, ..*self }
    }

    /// Fock amplitudes `c_0 … c_N`.
    pub fn coefficients(&self) -> Vec<C64> {
        let magnitudes = binomial_magnitudes(self.n_max, self.p);
        magnitudes.into_iter().enumerate().map(|(n, m)| C64::from_polar(m, n as f64 * self.phi)).collect()
    }
}

/// `[C(N,n) pⁿ (1−p)^(N−n)]^½` for `n = 0..=N`, in log space with `0⁰ = 1`.
fn binomial_magnitudes(n_max: usize, p: f64) -> Vec<f64> {
    if p == 0.0 || p == 1.0 {
        let mut out = vec![0.0; n_max + 1];
        out[if p == 0.0 { 0 } else { n_max }] = 1.0;
        return out;
    }
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = 0.0;
    (0..=n_max)
        .map(|n| {
            if n > 0 {
                ln_choose += ((n_max - n + 1) as f64 / n as f64).ln();
            }
            (0.5 * (ln_choose + n as f64 * ln_p + (n_max - n) as f64 * ln_q)).exp()
        })
        .collect()
}

/// Cavity-only state `|N, p, φ⟩` in a cavity of the given cutoff.
pub fn binomial_state(fock_cutoff: usize, spec: &BinomialSpec) -> Result<QuantumState> {
    spec.validate()?;
    if spec.n_max > fock_cutoff {
        return Err(Error::Cutoff { n: spec.n_max, cutoff: fock_cutoff });
    }
    let layout = HilbertLayout::cavity(fock_cutoff)?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dimension()];
    amplitudes[..=spec.n_max].copy_from_slice(&spec.coefficients());
    QuantumState::from_amplitudes(layout, amplitudes)
}

/// Closed-form `⟨a|b⟩ = [√((1−p_a)(1−p_b)) + √(p_a p_b) e^{i(φ_b−φ_a)}]^N`.
pub fn binomial_overlap(a: &BinomialSpec, b: &BinomialSpec) -> Result<C64> {
    a.validate()?;
    b.validate()?;
    if a.n_max != b.n_max {
        return Err(Error::PhotonNumberMismatch(a.n_max, b.n_max));
    }
    let base = C64::new(((1.0 - a.p) * (1.0 - b.p)).sqrt(), 0.0) + C64::from_polar((a.p * b.p).sqrt(), b.phi - a.phi);
    Ok(base.powu(a.n_max as u32))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatSpec {
    pub base: BinomialSpec,
    /// Weight η of the orthogonal component.
    pub eta: C64,
}

impl CatSpec {
    /// Maximal cat `[|N,p,φ⟩ ± e^{iγ}|N,1−p,π+φ⟩]/√2`.
    pub fn maximal(base: BinomialSpec, sign: f64, gamma: f64) -> Self {
        CatSpec { base, eta: C64::from_polar(sign.signum(), gamma) }
    }

    /// Normalization factor `1/√(1+|η|²)`.
    pub fn normalization(&self) -> f64 {
        1.0 / (1.0 + self.eta.norm_sqr()).sqrt()
    }

    /// Same cat after free field evolution for `ω·t = phase`. Both components
    /// pick up the same mean-phase shift, so η is unchanged.
    pub fn shifted(&self, phase: f64) -> Self {
        CatSpec { base: self.base.shifted(phase), eta: self.eta }
    }
}

/// `𝒩[|N,p,φ⟩ + η|N,1−p,π+φ⟩]`.
pub fn cat_state(fock_cutoff: usize, spec: &CatSpec) -> Result<QuantumState> {
    if !(spec.eta.re.is_finite() && spec.eta.im.is_finite()) {
        return Err(Error::parameter("eta", "must be finite"));
    }
    let first = binomial_state(fock_cutoff, &spec.base)?;
    let second = binomial_state(fock_cutoff, &spec.base.complement())?;
    let norm = spec.normalization();
    let amplitudes = first.amplitudes().iter().zip(second.amplitudes()).map(|(a, b)| (a + spec.eta * b) * norm).collect();
    QuantumState::from_amplitudes(*first.layout(), amplitudes)
}

/// `|⟨N,p,φ|ψ⟩|²` for a cavity-only state.
pub fn component_projection(state: &QuantumState, spec: &BinomialSpec) -> Result<f64> {
    if state.layout().atom_count() != 0 {
        return Err(Error::Layout("component_projection expects a cavity-only state".into()));
    }
    let component = binomial_state(state.layout().fock_cutoff(), spec)?;
    component.fidelity(state)
}

/// `⟨N,p,φ|ρ|N,p,φ⟩` for a reduced cavity density matrix.
pub fn component_weight(rho: &DensityMatrix, spec: &BinomialSpec) -> Result<f64> {
    let cutoff = rho.dimension().checked_sub(1).ok_or(Error::LayoutMismatch)?;
    rho.expectation(&binomial_state(cutoff, spec)?)
}
