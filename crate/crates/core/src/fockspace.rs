//! Truncated cavity ⊗ two-level atoms.
//!
//! Flat index convention: `index = n · 2^k + Σ_j s_j · 2^j`, with `k` atoms,
//! `s_j = 1` for an excited atom `j` and `0` for ground. Atom 0 is the least
//! significant bit, and atoms are numbered in the order they first enter the
//! apparatus.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, C64, NORM_TOL};

const MAX_ATOMS: usize = 16;

/// Atomic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Level {
    Down,
    Up,
}

impl Level {
    pub fn bit(self) -> usize {
        match self {
            Level::Down => 0,
            Level::Up => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 1 {
            Level::Up
        } else {
            Level::Down
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Down => "down",
            Level::Up => "up",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HilbertLayout {
    fock_cutoff: usize,
    atom_count: usize,
}

impl HilbertLayout {
    pub fn new(fock_cutoff: usize, atom_count: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(Error::Layout("fock_cutoff must be at least 1".into()));
        }
        if atom_count > MAX_ATOMS {
            return Err(Error::Layout(alloc::format!("at most {MAX_ATOMS} atoms supported")));
        }
        Ok(HilbertLayout { fock_cutoff, atom_count })
    }

    /// Cavity only, no atoms.
    pub fn cavity(fock_cutoff: usize) -> Result<Self> {
        Self::new(fock_cutoff, 0)
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn atom_dim(&self) -> usize {
        1 << self.atom_count
    }

    pub fn dimension(&self) -> usize {
        (self.fock_cutoff + 1) * self.atom_dim()
    }

    pub fn check_atom(&self, atom: usize) -> Result<()> {
        if atom < self.atom_count {
            Ok(())
        } else {
            Err(Error::AtomIndex { index: atom, atom_count: self.atom_count })
        }
    }

    pub fn index(&self, n: usize, spins: &[Level]) -> Result<usize> {
        if n > self.fock_cutoff {
            return Err(Error::Cutoff { n, cutoff: self.fock_cutoff });
        }
        if spins.len() != self.atom_count {
            return Err(Error::SpinCount { expected: self.atom_count, found: spins.len() });
        }
        let atoms = spins.iter().enumerate().fold(0, |acc, (j, s)| acc | (s.bit() << j));
        Ok(n * self.atom_dim() + atoms)
    }

    /// Inverse of [`HilbertLayout::index`].
    pub fn labels(&self, index: usize) -> (usize, Vec<Level>) {
        let (n, atoms) = self.split(index);
        let spins = (0..self.atom_count).map(|j| Level::from_bit(atoms >> j)).collect();
        (n, spins)
    }

    /// Photon number and packed atomic bits of a flat index.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index >> self.atom_count, index & (self.atom_dim() - 1))
    }
}

/// Selects the cavity and/or a set of atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Subsystems {
    pub cavity: bool,
    /// Bit `j` set selects atom `j`.
    pub atoms: u32,
}

impl Subsystems {
    pub fn none() -> Self {
        Subsystems::default()
    }

    pub fn cavity() -> Self {
        Subsystems { cavity: true, atoms: 0 }
    }

    pub fn atom(index: usize) -> Self {
        Subsystems { cavity: false, atoms: 1 << index }
    }

    pub fn atoms(indices: &[usize]) -> Self {
        Subsystems { cavity: false, atoms: indices.iter().fold(0, |m, &i| m | (1 << i)) }
    }

    pub fn with_cavity(mut self) -> Self {
        self.cavity = true;
        self
    }

    pub fn with_atom(mut self, index: usize) -> Self {
        self.atoms |= 1 << index;
        self
    }

    pub fn contains_atom(&self, index: usize) -> bool {
        index < 32 && self.atoms & (1 << index) != 0
    }

    pub fn is_empty(&self) -> bool {
        !self.cavity && self.atoms == 0
    }

    pub fn atom_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |&i| self.contains_atom(i))
    }

    pub(crate) fn check(&self, layout: &HilbertLayout) -> Result<()> {
        match self.atom_indices().find(|&i| i >= layout.atom_count()) {
            Some(index) => Err(Error::AtomIndex { index, atom_count: layout.atom_count() }),
            None => Ok(()),
        }
    }
}

/// A pure state. Operations return fresh values; states never alias.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: HilbertLayout,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Basis vector `|s_1 … s_k, n⟩`.
    pub fn basis(layout: HilbertLayout, n: usize, spins: &[Level]) -> Result<Self> {
        let index = layout.index(n, spins)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dimension()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(QuantumState { layout, amplitudes })
    }

    /// Wraps raw amplitudes, which must already be normalized.
    pub fn from_amplitudes(layout: HilbertLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dimension() {
            return Err(Error::Layout(alloc::format!("expected {} amplitudes, got {}", layout.dimension(), amplitudes.len())));
        }
        let state = QuantumState { layout, amplitudes };
        let drift = (state.norm() - 1.0).abs();
        if drift > 1e3 * NORM_TOL {
            return Err(Error::parameter("amplitudes", alloc::format!("norm deviates from 1 by {drift:e}")));
        }
        Ok(state)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(layout: HilbertLayout, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::parameter("amplitudes", "zero or non-finite norm"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        QuantumState::from_amplitudes(layout, amplitudes)
    }

    pub(crate) fn from_raw(layout: HilbertLayout, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.dimension());
        QuantumState { layout, amplitudes }
    }

    /// Field state tensored with atoms in the given levels.
    pub fn with_atoms(&self, spins: &[Level]) -> Result<Self> {
        if self.layout.atom_count != 0 {
            return Err(Error::Layout("with_atoms expects a cavity-only state".into()));
        }
        let layout = HilbertLayout::new(self.layout.fock_cutoff, spins.len())?;
        let offset = layout.index(0, spins)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dimension()];
        for (n, a) in self.amplitudes.iter().enumerate() {
            amplitudes[n * layout.atom_dim() + offset] = *a;
        }
        Ok(QuantumState { layout, amplitudes })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize, spins: &[Level]) -> Result<C64> {
        Ok(self.amplitudes[self.layout.index(n, spins)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Photon-number distribution `P(n)`, summed over atoms.
    pub fn photon_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.layout.fock_cutoff + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            dist[self.layout.split(i).0] += a.norm_sqr();
        }
        dist
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Probability in the `n = fock_cutoff` level.
    pub fn top_level_population(&self) -> f64 {
        self.photon_distribution()[self.layout.fock_cutoff]
    }

    /// Probability that atom `atom` is excited.
    pub fn excitation(&self, atom: usize) -> Result<f64> {
        self.layout.check_atom(atom)?;
        Ok(self.amplitudes.iter().enumerate().filter(|(i, _)| (i >> atom) & 1 == 1).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Cavity factor of the component with the given atomic levels,
    /// unnormalized: `⟨s_1 … s_k| ψ⟩`.
    pub fn field_component(&self, spins: &[Level]) -> Result<QuantumState> {
        let offset = self.layout.index(0, spins)?;
        let dim = self.layout.atom_dim();
        let amplitudes = (0..=self.layout.fock_cutoff).map(|n| self.amplitudes[n * dim + offset]).collect();
        Ok(QuantumState { layout: HilbertLayout::cavity(self.layout.fock_cutoff)?, amplitudes })
    }

    /// Multiplies every amplitude by `phase(index)`.
    pub(crate) fn map_phases(&self, mut phase: impl FnMut(usize) -> C64) -> QuantumState {
        let amplitudes = self.amplitudes.iter().enumerate().map(|(i, a)| a * phase(i)).collect();
        QuantumState { layout: self.layout, amplitudes }
    }
}

/// Hermitian, unit-trace matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn pure(state: &QuantumState) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let entries = (0..dim * dim).map(|k| amps[k / dim] * amps[k % dim].conj()).collect();
        DensityMatrix { dim, entries }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { dim, entries }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr ρ²`, which is `Σ_ij |ρ_ij|²` for Hermitian ρ.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `⟨ψ|ρ|ψ⟩` for a vector of matching dimension.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let v = state.amplitudes();
        if v.len() != self.dim {
            return Err(Error::LayoutMismatch);
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i].conj() * self.get(i, j) * v[j];
            }
        }
        Ok(acc.re)
    }
}

/// Partial trace keeping `keep`. Basis ordering of the result follows the
/// same convention as [`HilbertLayout`], restricted to the kept subsystems
/// (cavity first when kept, then kept atoms by ascending index as bits).
pub fn reduced_density(state: &QuantumState, keep: &Subsystems) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptySelector);
    }
    let layout = state.layout();
    keep.check(layout)?;
    let kept_atoms: Vec<usize> = keep.atom_indices().collect();
    let traced_atoms: Vec<usize> = (0..layout.atom_count()).filter(|&j| !keep.contains_atom(j)).collect();
    let fock_dim = layout.fock_cutoff() + 1;

    let kept_dim = (if keep.cavity { fock_dim } else { 1 }) << kept_atoms.len();
    let traced_dim = (if keep.cavity { 1 } else { fock_dim }) << traced_atoms.len();

    // split every flat index into (kept, traced) coordinates
    let gather = |bits: usize, atoms: &[usize]| atoms.iter().enumerate().fold(0, |acc, (k, &j)| acc | (((bits >> j) & 1) << k));
    let mut columns = vec![vec![C64::new(0.0, 0.0); kept_dim]; traced_dim];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let (n, bits) = layout.split(i);
        let ka = gather(bits, &kept_atoms);
        let ta = gather(bits, &traced_atoms);
        let (k, t) = if keep.cavity { ((n << kept_atoms.len()) | ka, ta) } else { (ka, (n << traced_atoms.len()) | ta) };
        columns[t][k] = *a;
    }

    let mut entries = vec![C64::new(0.0, 0.0); kept_dim * kept_dim];
    for col in &columns {
        for r in 0..kept_dim {
            if col[r] == C64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..kept_dim {
                entries[r * kept_dim + c] += col[r] * col[c].conj();
            }
        }
    }
    Ok(DensityMatrix { dim: kept_dim, entries })
}

/// `tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;
    use Level::{Down, Up};

    fn layout(cutoff: usize, atoms: usize) -> HilbertLayout {
        HilbertLayout::new(cutoff, atoms).unwrap()
    }

    #[test]
    fn basis_states() {
        let s = QuantumState::basis(layout(4, 1), 0, &[Down]).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(s.norm(), 1.0);

        let l = layout(4, 2);
        let s = QuantumState::basis(l, 2, &[Down, Down]).unwrap();
        assert_eq!(s.amplitude(2, &[Down, Down]).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);
        assert_eq!(l.dimension(), 20);
    }

    #[test]
    fn basis_errors() {
        assert_eq!(QuantumState::basis(layout(2, 1), 3, &[Down]).unwrap_err(), Error::Cutoff { n: 3, cutoff: 2 });
        assert_eq!(QuantumState::basis(layout(2, 2), 0, &[Down]).unwrap_err(), Error::SpinCount { expected: 2, found: 1 });
        assert!(HilbertLayout::new(0, 1).is_err());
    }

    #[test]
    fn index_is_little_endian() {
        let l = layout(3, 3);
        assert_eq!(l.index(0, &[Up, Down, Down]).unwrap(), 1);
        assert_eq!(l.index(0, &[Down, Down, Up]).unwrap(), 4);
        assert_eq!(l.index(2, &[Down, Up, Down]).unwrap(), 2 * 8 + 2);
        for i in 0..l.dimension() {
            let (n, spins) = l.labels(i);
            assert_eq!(l.index(n, &spins).unwrap(), i);
        }
    }

    #[test]
    fn inner_product_and_mismatch() {
        let a = QuantumState::basis(layout(3, 1), 1, &[Up]).unwrap();
        let b = QuantumState::basis(layout(3, 1), 1, &[Down]).unwrap();
        assert_eq!(a.inner(&a).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(a.inner(&b).unwrap(), C64::new(0.0, 0.0));
        let c = QuantumState::basis(layout(4, 1), 1, &[Up]).unwrap();
        assert_eq!(a.inner(&c).unwrap_err(), Error::LayoutMismatch);
    }

    #[test]
    fn product_state_reduces_to_pure_vacuum() {
        let s = QuantumState::basis(layout(4, 1), 0, &[Down]).unwrap();
        let rho = reduced_density(&s, &Subsystems::cavity()).unwrap();
        assert_eq!(rho.dimension(), 5);
        assert!((rho.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((purity(&rho) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_reduces_to_maximally_mixed() {
        let l = layout(1, 2);
        let mut amps = vec![C64::new(0.0, 0.0); l.dimension()];
        amps[l.index(0, &[Up, Down]).unwrap()] = C64::new(FRAC_1_SQRT_2, 0.0);
        amps[l.index(0, &[Down, Up]).unwrap()] = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = QuantumState::from_amplitudes(l, amps).unwrap();
        let rho = reduced_density(&s, &Subsystems::atom(0)).unwrap();
        assert_eq!(rho.dimension(), 2);
        assert!((rho.purity() - 0.5).abs() < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        // both atoms together stay pure
        let both = reduced_density(&s, &Subsystems::atoms(&[0, 1])).unwrap();
        assert!((both.purity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_selector_is_rejected() {
        let s = QuantumState::basis(layout(2, 1), 0, &[Down]).unwrap();
        assert_eq!(reduced_density(&s, &Subsystems::none()).unwrap_err(), Error::EmptySelector);
        assert!(reduced_density(&s, &Subsystems::atom(3)).is_err());
    }

    #[test]
    fn maximally_mixed_purity() {
        for d in 1..6 {
            assert!((DensityMatrix::maximally_mixed(d).purity() - 1.0 / d as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn field_component_extracts_cavity_factor() {
        let field = QuantumState::basis(HilbertLayout::cavity(3).unwrap(), 2, &[]).unwrap();
        let joint = field.with_atoms(&[Up, Down]).unwrap();
        assert_eq!(joint.field_component(&[Up, Down]).unwrap(), field);
        assert_eq!(joint.field_component(&[Down, Down]).unwrap().norm(), 0.0);
    }
}
