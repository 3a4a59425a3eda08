use std::f64::consts::PI;

use binomcat_core::analysis::solve_joint_timing_with_step;
use binomcat_core::dynamics::{free_evolve, jc_evolve, ramsey_rotate, PhysicalParams, RamseySetting};
use binomcat_core::fockspace::reduced_density;
use binomcat_core::states::{binomial_overlap, binomial_state, BinomialSpec};
use binomcat_core::{HilbertLayout, Level, QuantumState, Subsystems, C64};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn layout_strategy() -> impl Strategy<Value = HilbertLayout> {
    (1usize..6, 0usize..3).prop_map(|(n, k)| HilbertLayout::new(n, k).unwrap())
}

fn state_in(layout: HilbertLayout) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), layout.dimension()).prop_filter_map("zero vector", move |v| {
        let amps: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        QuantumState::normalized(layout, amps).ok()
    })
}

fn state_strategy() -> impl Strategy<Value = QuantumState> {
    layout_strategy().prop_flat_map(state_in)
}

/// States with an empty top Fock level so a JC crossing cannot leak.
fn jc_state(atoms: usize) -> impl Strategy<Value = QuantumState> {
    (2usize..7).prop_flat_map(move |cutoff| {
        let layout = HilbertLayout::new(cutoff, atoms).unwrap();
        state_in(layout).prop_map(move |s| {
            let top = cutoff * layout.atom_dim();
            let mut amps = s.amplitudes().to_vec();
            amps[top..].iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            amps[0] += C64::new(0.1, 0.0);
            QuantumState::normalized(layout, amps).unwrap()
        })
    })
}

fn params() -> PhysicalParams {
    PhysicalParams::new(1.0, 7.0).unwrap()
}

fn excitations(state: &QuantumState, atom: usize) -> f64 {
    state.mean_photon_number() + state.excitation(atom).unwrap()
}

fn distance(a: &QuantumState, b: &QuantumState) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn index_is_a_bijection(layout in layout_strategy()) {
        for i in 0..layout.dimension() {
            let (n, spins) = layout.labels(i);
            prop_assert_eq!(layout.index(n, &spins).unwrap(), i);
        }
    }

    #[test]
    fn inner_product_is_hermitian((a, b) in layout_strategy().prop_flat_map(|l| (state_in(l), state_in(l)))) {
        let ab = a.inner(&b).unwrap();
        let ba = b.inner(&a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-14);
        prop_assert!((a.inner(&a).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_density_is_a_state(state in state_strategy(), keep_cavity in any::<bool>(), mask in 0u32..8) {
        let k = state.layout().atom_count();
        let mut keep = if keep_cavity { Subsystems::cavity() } else { Subsystems::none() };
        for j in 0..k {
            if mask & (1 << j) != 0 {
                keep = keep.with_atom(j);
            }
        }
        prop_assume!(!keep.is_empty());
        let rho = reduced_density(&state, &keep).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(rho.hermiticity_error() < 1e-12);
        let d = rho.dimension();
        let m = DMatrix::from_fn(d, d, |r, c| {
            let z = rho.get(r, c);
            Complex::new(z.re, z.im)
        });
        // Hermitian: eigenvalues of the real symmetric embedding [[A, -B], [B, A]]
        let embed = DMatrix::from_fn(2 * d, 2 * d, |r, c| {
            let z = m[(r % d, c % d)];
            match (r < d, c < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let eig = embed.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e > -1e-12), "{eig:?}");
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
        prop_assert!(rho.purity() >= 1.0 / d as f64 - 1e-12);
    }

    #[test]
    fn binomial_states_are_normalized(n in 0usize..8, p in 0.0f64..=1.0, phi in -10.0f64..10.0) {
        let s = binomial_state(8, &BinomialSpec::new(n, p, phi).unwrap()).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        prop_assert!((s.mean_photon_number() - n as f64 * p).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal(n in 0usize..7, p in 0.0f64..=1.0, phi in -10.0f64..10.0) {
        let a = BinomialSpec::new(n, p, phi).unwrap();
        prop_assume!(n > 0);
        prop_assert!(binomial_overlap(&a, &a.complement()).unwrap().norm() < 1e-12);
        let va = binomial_state(6, &a).unwrap();
        let vb = binomial_state(6, &a.complement()).unwrap();
        prop_assert!(va.inner(&vb).unwrap().norm() < 1e-12);
    }

    #[test]
    fn closed_form_overlap_matches_vectors(n in 0usize..7, p in 0.0f64..=1.0, q in 0.0f64..=1.0, phi in -5.0f64..5.0, psi in -5.0f64..5.0) {
        let a = BinomialSpec::new(n, p, phi).unwrap();
        let b = BinomialSpec::new(n, q, psi).unwrap();
        let closed = binomial_overlap(&a, &b).unwrap();
        let direct = binomial_state(6, &a).unwrap().inner(&binomial_state(6, &b).unwrap()).unwrap();
        prop_assert!((closed - direct).norm() < 1e-12);
    }

    #[test]
    fn evolutions_are_unitary(state in jc_state(2), t in 0.0f64..20.0, theta in -7.0f64..7.0, phi in -7.0f64..7.0) {
        let jc = jc_evolve(&state, 1, &params(), t).unwrap();
        prop_assert!((jc.norm() - 1.0).abs() < 1e-10);
        let r = ramsey_rotate(&state, 0, &RamseySetting::new(theta, phi)).unwrap();
        prop_assert!((r.norm() - 1.0).abs() < 1e-10);
        let f = free_evolve(&state, &params(), t, &Subsystems::cavity().with_atom(0)).unwrap();
        prop_assert!((f.norm() - 1.0).abs() < 1e-10);
        // inner products preserved
        let other = QuantumState::basis(*state.layout(), 0, &[Level::Down, Level::Up]).unwrap();
        let before = state.inner(&other).unwrap();
        let after = jc.inner(&jc_evolve(&other, 1, &params(), t).unwrap()).unwrap();
        prop_assert!((before - after).norm() < 1e-10);
    }

    #[test]
    fn jc_conserves_excitations(state in jc_state(1), t in 0.0f64..20.0) {
        let out = jc_evolve(&state, 0, &params(), t).unwrap();
        prop_assert!((excitations(&state, 0) - excitations(&out, 0)).abs() < 1e-10);
    }

    #[test]
    fn jc_is_a_semigroup(state in jc_state(1), s in 0.0f64..10.0, t in 0.0f64..10.0) {
        let two_step = jc_evolve(&jc_evolve(&state, 0, &params(), s).unwrap(), 0, &params(), t).unwrap();
        let one_step = jc_evolve(&state, 0, &params(), s + t).unwrap();
        prop_assert!(distance(&two_step, &one_step) < 1e-10);
    }

    #[test]
    fn ramsey_inverse(state in jc_state(2), theta in -7.0f64..7.0, phi in -7.0f64..7.0) {
        let there = ramsey_rotate(&state, 1, &RamseySetting::new(theta, phi)).unwrap();
        let back = ramsey_rotate(&there, 1, &RamseySetting::new(-theta, phi)).unwrap();
        prop_assert!(distance(&back, &state) < 1e-12);
    }

    #[test]
    fn free_evolution_commutes_with_jc(state in jc_state(1), t in 0.0f64..10.0, s in 0.0f64..10.0) {
        let both = Subsystems::cavity().with_atom(0);
        let a = jc_evolve(&free_evolve(&state, &params(), s, &both).unwrap(), 0, &params(), t).unwrap();
        let b = free_evolve(&jc_evolve(&state, 0, &params(), t).unwrap(), &params(), s, &both).unwrap();
        prop_assert!(distance(&a, &b) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn timing_solutions_stable_under_refinement(hi in 20.0f64..120.0, step in 1e-3f64..1e-2) {
        let coarse = solve_joint_timing_with_step((0.0, hi), 1e-2, step).unwrap();
        let fine = solve_joint_timing_with_step((0.0, hi), 1e-2, step / 2.0).unwrap();
        prop_assert_eq!(coarse.len(), fine.len());
        for c in &coarse {
            let f = fine.iter().find(|f| f.k == c.k).expect("same candidates");
            prop_assert_eq!(c.gt, f.gt);
            prop_assert!((c.refined_gt - f.refined_gt).abs() <= step, "{} vs {}", c.refined_gt, f.refined_gt);
        }
    }
}

#[test]
fn timing_grid_is_exact_for_condition_one() {
    for s in solve_joint_timing_with_step((0.0, 200.0), 1.0, 1e-3).unwrap() {
        assert!(((s.gt / PI) * 4.0 - (8 * s.k + 1) as f64).abs() < 1e-9);
        assert!(s.residual1 < 1e-12);
    }
}
