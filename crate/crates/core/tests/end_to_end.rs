use binomcat_core::analysis::{outcome_statistics, EmpiricalDistribution};
use binomcat_core::dynamics::{jc_evolve, PhysicalParams};
use binomcat_core::fockspace::reduced_density;
use binomcat_core::protocols::schedule::{
    build_coherence, build_distinction, build_generation, fit_gamma, generation_target, swap_pulse_area, wrap_phase,
};
use binomcat_core::protocols::{
    outcome_distribution, CoherenceSchedule, DistinctionSchedule, FullPipeline, GenerationSchedule, OutcomeDistribution,
};
use binomcat_core::states::{binomial_state, cat_state, BinomialSpec, CatSpec};
use binomcat_core::{Level, QuantumState, Subsystems, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

use Level::{Down, Up};

const CUTOFF: usize = 8;

fn random_generation(rng: &mut ChaCha8Rng) -> GenerationSchedule {
    let g = rng.random_range(0.5..2.0);
    let tau1 = rng.random_range(0.0..5.0);
    let m = rng.random_range(0..3);
    GenerationSchedule {
        p: rng.random_range(0.0..=1.0),
        varphi1: rng.random_range(0.0..2.0 * PI),
        eta0: if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.2..3.0),
        m,
        tau1,
        tau2: rng.random_range(0.0..5.0),
        separation: tau1 + swap_pulse_area(m) / g + rng.random_range(0.0..5.0),
        params: PhysicalParams::new(g, rng.random_range(5.0..60.0)).unwrap(),
    }
}

fn generated(s: &GenerationSchedule) -> QuantumState {
    let events = build_generation(s).unwrap();
    let dist = outcome_distribution(&events, &s.params, &s.initial_state(CUTOFF).unwrap(), &Tolerances::default()).unwrap();
    assert_eq!(dist.branches.len(), 1);
    dist.branches[0].final_state.clone()
}

#[test]
fn generation_over_random_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 1.0f64;
    for _ in 0..100 {
        let s = random_generation(&mut rng);
        let state = generated(&s);
        let target = cat_state(CUTOFF, &generation_target(&s).unwrap()).unwrap();
        let fid = reduced_density(&state, &Subsystems::cavity()).unwrap().expectation(&target).unwrap();
        let ground = state.field_component(&[Down, Down]).unwrap().norm().powi(2);
        worst = worst.min(fid).min(ground);
        assert!(fid >= 0.999 && ground >= 0.999, "{s:?}: fidelity {fid}, ground {ground}");
    }
    // bounded by the two-photon residual of the 41π/4 crossing
    assert!(worst > 0.9998, "{worst}");
}

#[test]
fn fitted_gamma_matches_closed_form_plus_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let mut s = random_generation(&mut rng);
        s.p = rng.random_range(0.1..0.9);
        s.eta0 = 1.0;
        let field = generated(&s).field_component(&[Down, Down]).unwrap();
        let fit = fit_gamma(&field, &s, &s.timings()).unwrap().expect("both components populated");
        let diff = wrap_phase(fit.fitted - fit.closed_form - fit.offset);
        assert!(diff.abs().min((diff - 2.0 * PI).abs()) < 1e-2, "{fit:?}");
    }
}

fn detection(p: f64, phi: f64) -> DistinctionSchedule {
    DistinctionSchedule { p, phi, m: 0, t1: 0.8, t2: 1.1, t_prime: 2.5, params: PhysicalParams::new(1.0, 33.0).unwrap() }
}

fn run(events: &[binomcat_core::protocols::ProtocolEvent], params: &PhysicalParams, field: &QuantumState) -> OutcomeDistribution {
    outcome_distribution(events, params, &field.with_atoms(&[Down, Down]).unwrap(), &Tolerances::default()).unwrap()
}

#[test]
fn distinction_identifies_components_and_empties_cavity() {
    for (p, phi) in [(0.2, 0.3), (0.5, -1.0), (0.85, 2.4)] {
        let s = detection(p, phi);
        let events = build_distinction(&s).unwrap();
        let spec = BinomialSpec::new(2, p, phi).unwrap();
        let up = run(&events, &s.params, &binomial_state(CUTOFF, &spec).unwrap());
        assert!(up.probability(&[Up, Up]) >= 0.999);
        let down = run(&events, &s.params, &binomial_state(CUTOFF, &spec.complement()).unwrap());
        assert!(down.probability(&[Down, Down]) >= 0.999);

        let cat = run(&events, &s.params, &cat_state(CUTOFF, &CatSpec::maximal(spec, 1.0, 0.4)).unwrap());
        assert!((cat.probability(&[Up, Up]) - 0.5).abs() < 1e-3);
        assert!((cat.probability(&[Down, Down]) - 0.5).abs() < 1e-3);
        assert!(cat.probability(&[Up, Down]) + cat.probability(&[Down, Up]) < 1e-3);
        // conditional on the first probe, the second agrees
        let first_up = cat.probability(&[Up, Up]) + cat.probability(&[Up, Down]);
        assert!(cat.probability(&[Up, Up]) / first_up > 0.999);
        // the field ends in the vacuum on every likely branch
        for b in cat.branches.iter().filter(|b| b.probability > 0.01) {
            assert!(b.final_state.photon_distribution()[0] > 0.999, "{:?}", b.outcomes);
        }
    }
}

#[test]
fn first_probe_entangles_cat_with_atom() {
    let spec = BinomialSpec::new(2, 0.4, 0.9).unwrap();
    let params = PhysicalParams::new(1.0, 10.0).unwrap();
    let field = cat_state(CUTOFF, &CatSpec::maximal(spec, -1.0, 0.3)).unwrap().with_atoms(&[Down]).unwrap();
    let after = jc_evolve(&field, 0, &params, 41.0 * PI / 4.0).unwrap();
    let purity = reduced_density(&after, &Subsystems::cavity()).unwrap().purity();
    assert!((purity - 0.5).abs() < 1e-3, "{purity}");
}

#[test]
fn coherence_separates_signs() {
    for (p, phi, gamma) in [(0.3, 0.1, 0.0), (0.6, 1.7, 2.2)] {
        let s = CoherenceSchedule { detection: detection(p, phi), t1p: 0.4, t2p: 0.7, gamma };
        let events = build_coherence(&s).unwrap();
        let spec = BinomialSpec::new(2, p, phi).unwrap();
        let plus = run(&events, &s.detection.params, &cat_state(CUTOFF, &CatSpec::maximal(spec, 1.0, gamma)).unwrap());
        let minus = run(&events, &s.detection.params, &cat_state(CUTOFF, &CatSpec::maximal(spec, -1.0, gamma)).unwrap());
        assert!(plus.parallel() >= 0.999, "{}", plus.parallel());
        assert!(minus.antiparallel() >= 0.999, "{}", minus.antiparallel());
    }
}

#[test]
fn sampled_coherence_agrees_with_exact() {
    let s = CoherenceSchedule { detection: detection(0.4, 0.5), t1p: 0.4, t2p: 0.7, gamma: 1.0 };
    let events = build_coherence(&s).unwrap();
    let initial =
        cat_state(CUTOFF, &CatSpec::maximal(BinomialSpec::new(2, 0.4, 0.5).unwrap(), 1.0, 1.0)).unwrap().with_atoms(&[Down, Down]).unwrap();
    let trials = 2000;
    let exact = outcome_distribution(&events, &s.detection.params, &initial, &Tolerances::default()).unwrap();
    let sampled: EmpiricalDistribution =
        outcome_statistics(&events, &s.detection.params, &initial, trials, 7, &Tolerances::default()).unwrap();
    assert_eq!(sampled.trials, trials);
    for record in [[Up, Up], [Down, Down], [Up, Down], [Down, Up]] {
        assert!((sampled.frequency(&record) - exact.probability(&record)).abs() < 4.0 / (trials as f64).sqrt());
    }
    assert!(sampled.antiparallel() < 0.01);
}

#[test]
fn full_pipeline_reports_the_sign() {
    for eta0 in [1.0, -1.0] {
        let generation = GenerationSchedule {
            p: 0.35,
            varphi1: 0.6,
            eta0,
            m: 0,
            tau1: 0.5,
            tau2: 0.9,
            separation: 0.5 + FRAC_PI_2 + 2.0,
            params: PhysicalParams::new(1.0, 21.0).unwrap(),
        };
        let probes = CoherenceSchedule { detection: detection(0.5, 0.0), t1p: 0.4, t2p: 0.6, gamma: 0.0 };
        let pipeline = FullPipeline::new(generation, probes, 1.3).unwrap();
        let events = pipeline.build().unwrap();
        let dist =
            outcome_distribution(&events, &generation.params, &pipeline.initial_state(CUTOFF).unwrap(), &Tolerances::default()).unwrap();
        let (same, opposite) = (dist.parallel(), dist.antiparallel());
        if eta0 > 0.0 {
            assert!(same >= 0.999, "{same}");
        } else {
            assert!(opposite >= 0.999, "{opposite}");
        }
    }
}
