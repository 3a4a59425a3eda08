//! Frozen values from an independent numpy implementation of the same
//! sequences (dense arrays, explicit trig per Fock block).

use binomcat_core::dynamics::PhysicalParams;
use binomcat_core::fockspace::reduced_density;
use binomcat_core::protocols::schedule::{build_coherence, build_distinction, build_generation, generation_target};
use binomcat_core::protocols::{outcome_distribution, CoherenceSchedule, DistinctionSchedule, GenerationSchedule};
use binomcat_core::states::{binomial_state, cat_state, BinomialSpec, CatSpec};
use binomcat_core::{Level, Subsystems, Tolerances};

const CUTOFF: usize = 8;
const ORACLE_TOL: f64 = 1e-10;

fn generation_case(p: f64, varphi1: f64, eta0: f64, tau1: f64, tau2: f64, separation: f64, omega: f64) -> (f64, f64) {
    let s = GenerationSchedule { p, varphi1, eta0, m: 0, tau1, tau2, separation, params: PhysicalParams::new(1.0, omega).unwrap() };
    let events = build_generation(&s).unwrap();
    let dist = outcome_distribution(&events, &s.params, &s.initial_state(CUTOFF).unwrap(), &Tolerances::default()).unwrap();
    let state = &dist.branches[0].final_state;
    let target = cat_state(CUTOFF, &generation_target(&s).unwrap()).unwrap();
    let rho = reduced_density(state, &Subsystems::cavity()).unwrap();
    let ground = state.field_component(&[Level::Down, Level::Down]).unwrap().norm().powi(2);
    (rho.expectation(&target).unwrap(), ground)
}

#[test]
fn generation_matches_numpy_oracle() {
    let (fid, ground) = generation_case(0.3, 0.4, 1.0, 1.0, 1.5, 6.0, 40.0);
    assert!((fid - 0.9999819874304123).abs() < ORACLE_TOL, "{fid}");
    assert!((ground - 0.9999593586127065).abs() < ORACLE_TOL, "{ground}");

    let (fid, ground) = generation_case(0.5, 0.0, -1.0, 0.2, 0.7, 4.0, 25.0);
    assert!((fid - 0.9999944124959397).abs() < ORACLE_TOL, "{fid}");
    assert!((ground - 0.9999773654564417).abs() < ORACLE_TOL, "{ground}");
}

fn detection() -> DistinctionSchedule {
    DistinctionSchedule { p: 0.3, phi: 0.7, m: 0, t1: 1.0, t2: 1.3, t_prime: 3.0, params: PhysicalParams::new(1.0, 20.0).unwrap() }
}

fn records(dist: &binomcat_core::protocols::OutcomeDistribution) -> [f64; 4] {
    use Level::{Down, Up};
    [dist.probability(&[Up, Up]), dist.probability(&[Up, Down]), dist.probability(&[Down, Up]), dist.probability(&[Down, Down])]
}

fn assert_records(got: [f64; 4], want: [f64; 4]) {
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < ORACLE_TOL, "{got:?} vs {want:?}");
    }
}

#[test]
fn distinction_matches_numpy_oracle() {
    let s = detection();
    let events = build_distinction(&s).unwrap();
    let spec = BinomialSpec::new(2, s.p, s.phi).unwrap();
    let run = |field: &binomcat_core::QuantumState| {
        let initial = field.with_atoms(&[Level::Down, Level::Down]).unwrap();
        records(&outcome_distribution(&events, &s.params, &initial, &Tolerances::default()).unwrap())
    };
    assert_records(
        run(&binomial_state(CUTOFF, &spec).unwrap()),
        [0.9999886544318491, 6.39293018184353e-06, 2.2125079626417713e-06, 2.740130006268773e-06],
    );
    assert_records(
        run(&binomial_state(CUTOFF, &spec.complement()).unwrap()),
        [2.8105397100768652e-05, 3.480595321226003e-05, 1.204587668549355e-05, 0.9999250427730016],
    );
    assert_records(
        run(&cat_state(CUTOFF, &CatSpec::maximal(spec, 1.0, 1.1)).unwrap()),
        [0.5000051077123873, 2.7365661145452272e-05, 9.470890728515112e-06, 0.49995805573573837],
    );
}

#[test]
fn coherence_matches_numpy_oracle() {
    let s = CoherenceSchedule { detection: detection(), t1p: 0.5, t2p: 0.8, gamma: 1.1 };
    let events = build_coherence(&s).unwrap();
    let spec = BinomialSpec::new(2, 0.3, 0.7).unwrap();
    let run = |sign: f64| {
        let initial = cat_state(CUTOFF, &CatSpec::maximal(spec, sign, 1.1)).unwrap().with_atoms(&[Level::Down, Level::Down]).unwrap();
        records(&outcome_distribution(&events, &s.detection.params, &initial, &Tolerances::default()).unwrap())
    };
    assert_records(run(1.0), [0.4999880955971457, 2.0572305238574873e-05, 1.2730382219785165e-05, 0.4999786017153957]);
    assert_records(run(-1.0), [1.4159997775837033e-05, 0.5000143254393785, 0.4999667888646195, 4.725698226369354e-06]);
}
