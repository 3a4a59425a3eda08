//! Executes a validated [`RunConfig`] and assembles the report and tables.

use std::collections::BTreeMap;

use binomcat_core::analysis::{
    feasibility_check, jitter_trial, outcome_trial, solve_joint_timing, DistinctionInput, EmpiricalDistribution, FeasibilityBudget,
    FeasibilityVerdict, JitterModel, JitterReport, Summary, SweepProtocol, TimingSolution,
};
use binomcat_core::dynamics::PhysicalParams;
use binomcat_core::fockspace::reduced_density;
use binomcat_core::protocols::schedule::{build_coherence, build_distinction, build_generation, fit_gamma, generation_target};
use binomcat_core::protocols::{
    outcome_distribution, run_protocol_with, CoherenceSchedule, EventKind, GammaFit, GenerationSchedule, GenerationTimings,
    MeasurementEntry, OutcomeDistribution, ProtocolEvent,
};
use binomcat_core::states::{binomial_state, cat_state, BinomialSpec, CatSpec};
use binomcat_core::{Level, QuantumState, RngStream, Subsystems, Tolerances};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CavityInput, ConfigError, ProtocolKind, RunConfig, Sign, FORMAT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core { context: &'static str, source: binomcat_core::Error },
    #[error("invariant breach: {0}")]
    Invariant(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn ctx(context: &'static str) -> impl FnOnce(binomcat_core::Error) -> RunError {
    move |source| RunError::Core { context, source }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Cap on sweep worker threads; all cores when `None`.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub protocol: &'static str,
    pub seed: u64,
    pub trials: u64,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSummary>,
    pub timing: TimingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<JitterSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilitySummary>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationSummary {
    pub schedule: GenerationSchedule,
    pub timings: GenerationTimings,
    pub target: CatSpec,
    /// `⟨target|ρ_cavity|target⟩`.
    pub cavity_fidelity: f64,
    /// Both generation atoms found in `|↓⟩`.
    pub ground_probability: f64,
    pub cavity_purity: f64,
    pub mean_photon_number: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_fit: Option<GammaFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchEntry {
    pub record: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSummary {
    pub schedule: CoherenceSchedule,
    pub input: String,
    pub branches: Vec<BranchEntry>,
    /// Probability of the record the input should produce.
    pub expected_probability: f64,
    pub parallel: f64,
    pub antiparallel: f64,
    /// Vacuum population of the field averaged over branches.
    pub final_vacuum_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub delay: f64,
    pub probes: CoherenceSchedule,
    pub branches: Vec<BranchEntry>,
    pub parallel: f64,
    pub antiparallel: f64,
    /// "plus" when the probes agree, "minus" when they disagree.
    pub sign_detection: &'static str,
    pub single_shot_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub seed: u64,
    pub trials: u64,
    pub histogram: BTreeMap<String, u64>,
    pub parallel: f64,
    pub antiparallel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingSummary {
    pub range: [f64; 2],
    pub tolerance: f64,
    pub solutions: Vec<TimingSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JitterSummary {
    pub seed: u64,
    pub trials: u64,
    pub model: JitterModel,
    /// Setup the sweep perturbs.
    pub target: &'static str,
    pub fidelity: Summary,
    pub correctness: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilitySummary {
    pub budget: FeasibilityBudget,
    pub verdict: FeasibilityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub events: usize,
    pub total_duration: f64,
    pub norm_drift: f64,
    pub max_leakage: f64,
    /// Total probability of the enumerated measurement branches.
    pub branch_total: f64,
    /// One sampled run on stream 0 of the seed.
    pub single_shot: Vec<MeasurementEntry>,
}

/// Flat comma-separated series.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

pub fn record_label(record: &[Level]) -> String {
    record
        .iter()
        .map(|l| match l {
            Level::Up => "up",
            Level::Down => "down",
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn branch_entries(dist: &OutcomeDistribution) -> Vec<BranchEntry> {
    let mut merged: BTreeMap<String, f64> = BTreeMap::new();
    for b in &dist.branches {
        *merged.entry(record_label(&b.outcomes)).or_insert(0.0) += b.probability;
    }
    merged.into_iter().map(|(record, probability)| BranchEntry { record, probability }).collect()
}

fn final_vacuum(dist: &OutcomeDistribution) -> f64 {
    dist.branches.iter().map(|b| b.probability * b.final_state.photon_distribution()[0]).sum()
}

fn pool(options: &RunOptions) -> Result<rayon::ThreadPool, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = options.workers {
        builder = builder.num_threads(w.max(1));
    }
    builder.build().map_err(|e| RunError::Pool(e.to_string()))
}

/// What the protocol runs on, plus how to score it.
struct Plan {
    events: Vec<ProtocolEvent>,
    params: PhysicalParams,
    initial: QuantumState,
}

pub fn run(config: &RunConfig, options: &RunOptions) -> Result<RunOutput, RunError> {
    config.validate()?;
    let resolved = config.resolve()?;
    let tol = config.tolerances;
    let cutoff = config.physics.fock_cutoff;
    let pool = pool(options)?;
    let mut tables = Vec::new();

    let mut generation = None;
    let mut detection = None;
    let mut pipeline = None;
    let (plan, sweep, sweep_target) = match config.protocol {
        ProtocolKind::Generate => {
            let s = resolved.generation.expect("validated");
            let events = build_generation(&s).map_err(ctx("generation schedule"))?;
            let plan = Plan { events, params: s.params, initial: s.initial_state(cutoff).map_err(ctx("generation"))? };
            generation = Some(summarize_generation(&s, &plan, &tol)?);
            (plan, SweepProtocol::Generation(s), "generation")
        }
        ProtocolKind::Distinguish => {
            let c = resolved.detection.expect("validated");
            let s = c.detection;
            let d = config.detection.as_ref().expect("validated");
            let input = d.input.unwrap_or(CavityInput::Cat);
            let spec = BinomialSpec::new(2, s.p, s.phi).map_err(ctx("detection"))?;
            let (field, expected, label) = match input {
                CavityInput::Excited => (binomial_state(cutoff, &spec), Some([Level::Up, Level::Up]), "excited".to_string()),
                CavityInput::Ground => (binomial_state(cutoff, &spec.complement()), Some([Level::Down, Level::Down]), "ground".to_string()),
                CavityInput::Cat => {
                    let sign = d.sign.unwrap_or(Sign::Plus);
                    (cat_state(cutoff, &CatSpec::maximal(spec, sign.value(), c.gamma)), None, format!("cat_{}", sign_name(sign)))
                }
            };
            let initial = field.and_then(|f| f.with_atoms(&[Level::Down, Level::Down])).map_err(ctx("detection input"))?;
            let events = build_distinction(&s).map_err(ctx("distinction schedule"))?;
            let plan = Plan { events, params: s.params, initial };
            let dist = outcome_distribution(&plan.events, &plan.params, &plan.initial, &tol).map_err(ctx("distinction"))?;
            // a maximal cat should split evenly between the two agreeing records
            let expected_probability = match expected {
                Some(r) => dist.probability(&r),
                None => dist.parallel(),
            };
            detection = Some(detection_summary(c, label, &dist, expected_probability));
            let sweep_input = if input == CavityInput::Ground { DistinctionInput::Ground } else { DistinctionInput::Excited };
            (plan, SweepProtocol::Distinction { schedule: s, input: sweep_input }, "distinction")
        }
        ProtocolKind::Coherence => {
            let c = resolved.detection.expect("validated");
            let sign = config.detection.as_ref().and_then(|d| d.sign).unwrap_or(Sign::Plus);
            let spec = BinomialSpec::new(2, c.detection.p, c.detection.phi).map_err(ctx("detection"))?;
            let initial = cat_state(cutoff, &CatSpec::maximal(spec, sign.value(), c.gamma))
                .and_then(|f| f.with_atoms(&[Level::Down, Level::Down]))
                .map_err(ctx("coherence input"))?;
            let events = build_coherence(&c).map_err(ctx("coherence schedule"))?;
            let plan = Plan { events, params: c.detection.params, initial };
            let dist = outcome_distribution(&plan.events, &plan.params, &plan.initial, &tol).map_err(ctx("coherence"))?;
            let expected = if sign == Sign::Plus { dist.parallel() } else { dist.antiparallel() };
            detection = Some(detection_summary(c, format!("cat_{}", sign_name(sign)), &dist, expected));
            (plan, SweepProtocol::Coherence { schedule: c, sign: sign.value() }, "coherence")
        }
        ProtocolKind::FullPipeline => {
            let p = resolved.pipeline.expect("validated");
            let g = p.generation;
            let stage = Plan {
                events: build_generation(&g).map_err(ctx("generation schedule"))?,
                params: g.params,
                initial: g.initial_state(cutoff).map_err(ctx("generation"))?,
            };
            generation = Some(summarize_generation(&g, &stage, &tol)?);
            let probes = p.coherence_schedule(&g.timings()).map_err(ctx("pipeline probes"))?;
            let plan = Plan {
                events: p.build().map_err(ctx("pipeline schedule"))?,
                params: g.params,
                initial: p.initial_state(cutoff).map_err(ctx("pipeline"))?,
            };
            let dist = outcome_distribution(&plan.events, &plan.params, &plan.initial, &tol).map_err(ctx("pipeline"))?;
            let (par, anti) = (dist.parallel(), dist.antiparallel());
            pipeline = Some(PipelineSummary {
                delay: p.delay,
                probes,
                branches: branch_entries(&dist),
                parallel: par,
                antiparallel: anti,
                sign_detection: if par >= anti { "plus" } else { "minus" },
                single_shot_probability: par.max(anti),
            });
            (plan, SweepProtocol::Generation(g), "generation")
        }
    };

    let dist = outcome_distribution(&plan.events, &plan.params, &plan.initial, &tol).map_err(ctx("branch enumeration"))?;
    if let Some(d) = &detection {
        tables.push(branch_table(&d.branches));
    } else if let Some(p) = &pipeline {
        tables.push(branch_table(&p.branches));
    }

    let shot =
        run_protocol_with(&plan.events, &plan.params, &plan.initial, &mut RngStream::new(config.seed), &tol).map_err(ctx("single shot"))?;
    let diagnostics = Diagnostics {
        events: plan.events.len(),
        total_duration: plan.events.iter().map(|e| e.start + e.duration()).fold(0.0, f64::max),
        norm_drift: shot.report.norm_drift,
        max_leakage: shot.report.max_leakage,
        branch_total: dist.total(),
        single_shot: shot.report.measurements.clone(),
    };

    let measures = plan.events.iter().any(|e| matches!(e.kind, EventKind::Measure { .. }));
    let sampling = if measures && config.trials > 0 {
        let records: Vec<Vec<Level>> = pool
            .install(|| {
                (0..config.trials)
                    .into_par_iter()
                    .map(|i| outcome_trial(&plan.events, &plan.params, &plan.initial, config.seed, i, &tol))
                    .collect::<Result<Vec<_>, _>>()
            })
            .map_err(ctx("outcome sampling"))?;
        tables.push(Table {
            name: "samples",
            header: vec!["trial", "record"],
            rows: records.iter().enumerate().map(|(i, r)| vec![i.to_string(), record_label(r)]).collect(),
        });
        let empirical = EmpiricalDistribution::from_records(config.seed, records);
        Some(SamplingSummary {
            seed: config.seed,
            trials: empirical.trials,
            histogram: empirical.counts.iter().map(|(r, c)| (record_label(r), *c)).collect(),
            parallel: empirical.parallel(),
            antiparallel: empirical.antiparallel(),
        })
    } else {
        None
    };

    let tolerance = config.timing.tolerance.unwrap_or(tol.timing);
    let solutions = solve_joint_timing((config.timing.range[0], config.timing.range[1]), tolerance).map_err(ctx("timing solver"))?;
    tables.push(Table {
        name: "timing",
        header: vec!["k", "gt", "residual1", "residual2", "joint_fidelity", "refined_gt", "refined_joint_fidelity"],
        rows: solutions
            .iter()
            .map(|s| {
                vec![
                    s.k.to_string(),
                    s.gt.to_string(),
                    s.residual1.to_string(),
                    s.residual2.to_string(),
                    s.joint_fidelity.to_string(),
                    s.refined_gt.to_string(),
                    s.refined_joint_fidelity.to_string(),
                ]
            })
            .collect(),
    });
    let timing = TimingSummary { range: config.timing.range, tolerance, solutions };

    let jitter = match config.jitter_model() {
        Some(model) => {
            let trials = pool
                .install(|| {
                    (0..config.trials).into_par_iter().map(|i| jitter_trial(&sweep, &model, i, cutoff, &tol)).collect::<Result<Vec<_>, _>>()
                })
                .map_err(ctx("jitter sweep"))?;
            let report = JitterReport::from_trials(model, trials).map_err(ctx("jitter sweep"))?;
            tables.push(Table {
                name: "jitter",
                header: vec!["trial", "factor1", "factor2", "fidelity", "correctness"],
                rows: report
                    .trials
                    .iter()
                    .map(|t| {
                        vec![
                            t.index.to_string(),
                            t.factor1.to_string(),
                            t.factor2.to_string(),
                            t.fidelity.to_string(),
                            t.correctness.to_string(),
                        ]
                    })
                    .collect(),
            });
            Some(JitterSummary {
                seed: model.seed,
                trials: config.trials,
                model,
                target: sweep_target,
                fidelity: report.fidelity,
                correctness: report.correctness,
            })
        }
        None => None,
    };

    let feasibility = match &config.feasibility {
        Some(l) => {
            let budget = FeasibilityBudget {
                tau_at: l.tau_at,
                tau_cav: l.tau_cav,
                total_sequence_time: diagnostics.total_duration,
                max_interaction_time: plan
                    .events
                    .iter()
                    .filter_map(|e| match e.kind {
                        EventKind::Cavity { duration, .. } => Some(duration),
                        _ => None,
                    })
                    .fold(0.0, f64::max),
            };
            Some(FeasibilitySummary { budget, verdict: feasibility_check(&budget).map_err(ctx("feasibility"))? })
        }
        None => None,
    };

    let report = Report {
        format_version: FORMAT_VERSION,
        protocol: config.protocol.name(),
        seed: config.seed,
        trials: config.trials,
        config: config.clone(),
        generation,
        detection,
        pipeline,
        sampling,
        timing,
        jitter,
        feasibility,
        diagnostics,
    };
    check_invariants(&report, &tol)?;
    Ok(RunOutput { report, tables })
}

fn sign_name(sign: Sign) -> &'static str {
    match sign {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn branch_table(branches: &[BranchEntry]) -> Table {
    Table {
        name: "branches",
        header: vec!["record", "probability"],
        rows: branches.iter().map(|b| vec![b.record.clone(), b.probability.to_string()]).collect(),
    }
}

fn detection_summary(
    schedule: CoherenceSchedule,
    input: String,
    dist: &OutcomeDistribution,
    expected_probability: f64,
) -> DetectionSummary {
    DetectionSummary {
        schedule,
        input,
        branches: branch_entries(dist),
        expected_probability,
        parallel: dist.parallel(),
        antiparallel: dist.antiparallel(),
        final_vacuum_probability: final_vacuum(dist),
    }
}

fn summarize_generation(s: &GenerationSchedule, plan: &Plan, tol: &Tolerances) -> Result<GenerationSummary, RunError> {
    let dist = outcome_distribution(&plan.events, &plan.params, &plan.initial, tol).map_err(ctx("generation"))?;
    let state = &dist.branches[0].final_state;
    let target = generation_target(s).map_err(ctx("generation target"))?;
    let rho = reduced_density(state, &Subsystems::cavity()).map_err(ctx("generation"))?;
    let field = state.field_component(&[Level::Down, Level::Down]).map_err(ctx("generation"))?;
    let timings = s.timings();
    Ok(GenerationSummary {
        schedule: *s,
        timings,
        target,
        cavity_fidelity: rho
            .expectation(&cat_state(plan.initial.layout().fock_cutoff(), &target).map_err(ctx("generation target"))?)
            .map_err(ctx("generation"))?,
        ground_probability: field.norm().powi(2),
        cavity_purity: rho.purity(),
        mean_photon_number: state.mean_photon_number(),
        gamma_fit: fit_gamma(&field, s, &timings).map_err(ctx("gamma fit"))?,
    })
}

fn check_invariants(report: &Report, tol: &Tolerances) -> Result<(), RunError> {
    let d = &report.diagnostics;
    if d.norm_drift > tol.norm {
        return Err(RunError::Invariant(format!("norm drift {} exceeds {}", d.norm_drift, tol.norm)));
    }
    if d.max_leakage > tol.norm {
        return Err(RunError::Invariant(format!("top Fock level population {} exceeds {}", d.max_leakage, tol.norm)));
    }
    if (d.branch_total - 1.0).abs() > tol.fidelity {
        return Err(RunError::Invariant(format!("branch probabilities sum to {}", d.branch_total)));
    }
    let in_range = |name: &str, v: f64| {
        if (-tol.fidelity..=1.0 + tol.fidelity).contains(&v) {
            Ok(())
        } else {
            Err(RunError::Invariant(format!("{name} = {v} is not a probability")))
        }
    };
    if let Some(g) = &report.generation {
        in_range("cavity_fidelity", g.cavity_fidelity)?;
        in_range("ground_probability", g.ground_probability)?;
        in_range("cavity_purity", g.cavity_purity)?;
    }
    if let Some(j) = &report.jitter {
        in_range("jitter fidelity", j.fidelity.min)?;
        in_range("jitter fidelity", j.fidelity.max)?;
    }
    Ok(())
}
