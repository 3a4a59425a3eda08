//! Run configuration: TOML schema, parsing with field paths, validation and
//! resolution into core schedules.

use std::fmt;

use binomcat_core::analysis::{JitterDistribution, JitterModel};
use binomcat_core::dynamics::PhysicalParams;
use binomcat_core::protocols::schedule::{swap_pulse_area, DetectionFlight, GenerationFlight};
use binomcat_core::protocols::{CoherenceSchedule, DistinctionSchedule, FullPipeline, GenerationSchedule};
use binomcat_core::{Tolerances, DEFAULT_FOCK_CUTOFF};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Config error carrying the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Generate,
    Distinguish,
    Coherence,
    FullPipeline,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Generate => "generate",
            ProtocolKind::Distinguish => "distinguish",
            ProtocolKind::Coherence => "coherence",
            ProtocolKind::FullPipeline => "full-pipeline",
        }
    }
}

/// Unit of every direct duration in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnits {
    Seconds,
    /// Dimensionless `g·t`.
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CavityInput {
    /// Maximal cat built from `p`, `phi`, `gamma` and `sign`.
    Cat,
    Excited,
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub protocol: ProtocolKind,
    #[serde(default)]
    pub seed: u64,
    /// Sampled single-shot runs and jitter trials.
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_units: Option<TimeUnits>,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<JitterConfig>,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<LifetimeConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Atom-field coupling (rad/s).
    pub g: f64,
    /// Mode frequency (rad/s).
    pub omega: f64,
    pub fock_cutoff: usize,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig { g: 1.0, omega: 100.0, fock_cutoff: DEFAULT_FOCK_CUTOFF }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub varphi1: f64,
    #[serde(default = "one")]
    pub eta0: f64,
    #[serde(default)]
    pub m: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flight: Option<GenerationFlight>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub m: u32,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<CavityInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flight: Option<DetectionFlight>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Free cavity time between generation and the first probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub relative_sigma: f64,
    #[serde(default = "uniform")]
    pub distribution: JitterDistribution,
}

fn uniform() -> JitterDistribution {
    JitterDistribution::Uniform
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Search interval in `gT`.
    pub range: [f64; 2],
    /// Residual bound; `tolerances.timing` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig { range: [0.0, 50.0], tolerance: None }
    }
}

/// Atomic and photon lifetimes (s) for the decay budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeConfig {
    pub tau_at: f64,
    pub tau_cav: f64,
}

// default durations, in units of 1/g
const DEFAULT_FLIGHT: f64 = 2.0;
const DEFAULT_CLEARANCE: f64 = 2.0;
const DEFAULT_ZONE_GAP: f64 = 1.0;

/// Parses and validates TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("<document>", e.message()))?;
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".to_string() } else { path };
        ConfigError::new(path, e.inner().message())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn to_toml(config: &RunConfig) -> Result<String, ConfigError> {
    toml::to_string_pretty(config).map_err(|e| ConfigError::new("<document>", e))
}

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, "must be finite"))
    }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be non-negative, got {v}")))
    }
}

fn probability(path: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("{v} is outside [0, 1]")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ConfigError::new(
                "format_version",
                format!("unsupported version {}, expected {FORMAT_VERSION}", self.format_version),
            ));
        }
        // TOML integers are signed 64-bit; keep the echoed config parseable
        if self.seed > i64::MAX as u64 {
            return Err(ConfigError::new("seed", format!("must be at most {}", i64::MAX)));
        }
        if self.trials > i64::MAX as u64 {
            return Err(ConfigError::new("trials", format!("must be at most {}", i64::MAX)));
        }
        positive("physics.g", self.physics.g)?;
        positive("physics.omega", self.physics.omega)?;
        if self.physics.fock_cutoff < 3 {
            return Err(ConfigError::new("physics.fock_cutoff", "must be at least 3 for two-photon states"));
        }
        for (path, v) in [
            ("tolerances.norm", self.tolerances.norm),
            ("tolerances.fidelity", self.tolerances.fidelity),
            ("tolerances.timing", self.tolerances.timing),
        ] {
            non_negative(path, v)?;
        }
        let [lo, hi] = self.timing.range;
        finite("timing.range", lo)?;
        finite("timing.range", hi)?;
        if hi <= lo {
            return Err(ConfigError::new("timing.range", format!("empty interval [{lo}, {hi}]")));
        }
        if let Some(t) = self.timing.tolerance {
            positive("timing.tolerance", t)?;
        }
        if let Some(j) = &self.jitter {
            non_negative("jitter.relative_sigma", j.relative_sigma)?;
            if self.trials == 0 {
                return Err(ConfigError::new("trials", "a jitter sweep needs at least 1 trial"));
            }
        }
        if let Some(f) = &self.feasibility {
            positive("feasibility.tau_at", f.tau_at)?;
            positive("feasibility.tau_cav", f.tau_cav)?;
        }
        self.check_sections()?;
        self.check_units()?;
        // building the schedules runs every remaining physical check
        self.resolve().map(|_| ())
    }

    fn check_sections(&self) -> Result<(), ConfigError> {
        let needs_generation = matches!(self.protocol, ProtocolKind::Generate | ProtocolKind::FullPipeline);
        let needs_detection = matches!(self.protocol, ProtocolKind::Distinguish | ProtocolKind::Coherence);
        if needs_generation && self.generation.is_none() {
            return Err(ConfigError::new("generation", format!("required for protocol {}", self.protocol.name())));
        }
        if needs_detection && self.detection.is_none() {
            return Err(ConfigError::new("detection", format!("required for protocol {}", self.protocol.name())));
        }
        if self.pipeline.is_some() && self.protocol != ProtocolKind::FullPipeline {
            return Err(ConfigError::new("pipeline", "only used by protocol full-pipeline"));
        }
        if let Some(g) = &self.generation {
            if g.p.is_none() {
                return Err(ConfigError::new("generation.p", "missing field"));
            }
        }
        if let Some(d) = &self.detection {
            if needs_detection && d.p.is_none() {
                return Err(ConfigError::new("detection.p", "missing field"));
            }
            if self.protocol == ProtocolKind::FullPipeline {
                if d.p.is_some() {
                    return Err(ConfigError::new("detection.p", "taken from the generation stage in full-pipeline"));
                }
                if d.input.is_some() || d.sign.is_some() {
                    return Err(ConfigError::new("detection.input", "the full pipeline probes the generated cat"));
                }
            }
            if self.protocol == ProtocolKind::Distinguish && (d.t1p.is_some() || d.t2p.is_some()) {
                return Err(ConfigError::new("detection.t1p", "coherence-zone flights are not used by distinguish"));
            }
            if self.protocol == ProtocolKind::Coherence && matches!(d.input, Some(CavityInput::Excited | CavityInput::Ground)) {
                return Err(ConfigError::new("detection.input", "coherence probes a cat; use sign instead"));
            }
        }
        if self.jitter.is_some() && self.protocol == ProtocolKind::Distinguish {
            let input = self.detection.as_ref().and_then(|d| d.input).unwrap_or(CavityInput::Cat);
            if input == CavityInput::Cat {
                return Err(ConfigError::new("detection.input", "a distinguish jitter sweep needs input excited or ground"));
            }
        }
        Ok(())
    }

    /// Direct durations need an explicit unit, and flight mode (velocities and
    /// distances) only makes sense in seconds.
    fn check_units(&self) -> Result<(), ConfigError> {
        let mut direct: Vec<&str> = Vec::new();
        let mut flights: Vec<&str> = Vec::new();
        if let Some(g) = &self.generation {
            for (name, v) in [("generation.tau1", g.tau1), ("generation.tau2", g.tau2), ("generation.separation", g.separation)] {
                if v.is_some() {
                    direct.push(name);
                    if g.flight.is_some() {
                        return Err(ConfigError::new(name, "cannot be combined with generation.flight"));
                    }
                }
            }
            if g.flight.is_some() {
                flights.push("generation.flight");
            }
        }
        if let Some(d) = &self.detection {
            for (name, v) in [
                ("detection.t1", d.t1),
                ("detection.t2", d.t2),
                ("detection.t_prime", d.t_prime),
                ("detection.t1p", d.t1p),
                ("detection.t2p", d.t2p),
            ] {
                if v.is_some() {
                    direct.push(name);
                    if d.flight.is_some() {
                        return Err(ConfigError::new(name, "cannot be combined with detection.flight"));
                    }
                }
            }
            if d.flight.is_some() {
                flights.push("detection.flight");
            }
        }
        if let Some(PipelineConfig { delay: Some(_) }) = self.pipeline {
            direct.push("pipeline.delay");
        }
        match self.time_units {
            None if !direct.is_empty() => Err(ConfigError::new("time_units", format!("required when durations are given ({})", direct[0]))),
            None if !flights.is_empty() => {
                Err(ConfigError::new("time_units", format!("required by {}; flight mode is in seconds", flights[0])))
            }
            Some(TimeUnits::Gt) if !flights.is_empty() => {
                Err(ConfigError::new(flights[0], "flight mode derives durations in seconds and cannot be mixed with time_units = \"gt\""))
            }
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams { g: self.physics.g, omega: self.physics.omega }
    }

    fn seconds(&self, v: f64) -> f64 {
        match self.time_units {
            Some(TimeUnits::Gt) => v / self.physics.g,
            _ => v,
        }
    }

    /// Duration in seconds, or a default given in units of 1/g.
    fn duration(&self, path: &str, v: Option<f64>, default_gt: f64) -> Result<f64, ConfigError> {
        match v {
            Some(v) => {
                non_negative(path, v)?;
                Ok(self.seconds(v))
            }
            None => Ok(default_gt / self.physics.g),
        }
    }

    pub fn jitter_model(&self) -> Option<JitterModel> {
        self.jitter.map(|j| JitterModel { relative_sigma: j.relative_sigma, distribution: j.distribution, seed: self.seed })
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let params = self.params();
        let generation = match &self.generation {
            Some(g) => Some(self.generation_schedule(g, params)?),
            None => None,
        };
        let detection = match (&self.detection, self.protocol) {
            (Some(d), _) => Some(self.coherence_schedule(d, params)?),
            (None, ProtocolKind::FullPipeline) => Some(self.coherence_schedule(&DetectionConfig::default(), params)?),
            (None, _) => None,
        };
        let pipeline = match (self.protocol, generation, detection) {
            (ProtocolKind::FullPipeline, Some(generation), Some(probes)) => {
                let delay = self.duration("pipeline.delay", self.pipeline.and_then(|p| p.delay), DEFAULT_ZONE_GAP)?;
                Some(FullPipeline::new(generation, probes, delay).map_err(|e| core_error("pipeline", e))?)
            }
            _ => None,
        };
        Ok(Resolved { generation, detection, pipeline })
    }

    fn generation_schedule(&self, g: &GenerationConfig, params: PhysicalParams) -> Result<GenerationSchedule, ConfigError> {
        let p = g.p.ok_or_else(|| ConfigError::new("generation.p", "missing field"))?;
        probability("generation.p", p)?;
        finite("generation.varphi1", g.varphi1)?;
        finite("generation.eta0", g.eta0)?;
        let schedule = match &g.flight {
            Some(flight) => {
                positive("generation.flight.v1", flight.v1)?;
                positive("generation.flight.v2", flight.v2)?;
                non_negative("generation.flight.ramsey_to_cavity", flight.ramsey_to_cavity)?;
                non_negative("generation.flight.separation", flight.separation)?;
                GenerationSchedule::from_flight(p, g.varphi1, g.eta0, g.m, flight, params).map_err(|e| core_error("generation", e))?
            }
            None => {
                let tau1 = self.duration("generation.tau1", g.tau1, DEFAULT_FLIGHT)?;
                let tau2 = self.duration("generation.tau2", g.tau2, DEFAULT_FLIGHT)?;
                let transit = tau1 + swap_pulse_area(g.m) / params.g;
                let separation = self.duration("generation.separation", g.separation, 0.0)?;
                let separation = if g.separation.is_some() { separation } else { transit + DEFAULT_CLEARANCE / params.g };
                if separation < transit {
                    return Err(ConfigError::new(
                        "generation.separation",
                        format!("{separation} s is shorter than the atom-1 transit {transit} s"),
                    ));
                }
                GenerationSchedule { p, varphi1: g.varphi1, eta0: g.eta0, m: g.m, tau1, tau2, separation, params }
            }
        };
        schedule.validate().map_err(|e| core_error("generation", e))?;
        Ok(schedule)
    }

    fn coherence_schedule(&self, d: &DetectionConfig, params: PhysicalParams) -> Result<CoherenceSchedule, ConfigError> {
        // in the full pipeline p, phi and gamma are overwritten later
        let p = d.p.unwrap_or(0.5);
        probability("detection.p", p)?;
        finite("detection.phi", d.phi)?;
        finite("detection.gamma", d.gamma)?;
        let schedule = match &d.flight {
            Some(flight) => {
                positive("detection.flight.v1", flight.v1)?;
                positive("detection.flight.v2", flight.v2)?;
                non_negative("detection.flight.cavity_to_decoder", flight.cavity_to_decoder)?;
                non_negative("detection.flight.decoder_to_coherence", flight.decoder_to_coherence)?;
                non_negative("detection.flight.t_prime", flight.t_prime)?;
                CoherenceSchedule::from_flight(p, d.phi, d.gamma, d.m, flight, params).map_err(|e| core_error("detection", e))?
            }
            None => {
                let t1 = self.duration("detection.t1", d.t1, DEFAULT_FLIGHT)?;
                let t2 = self.duration("detection.t2", d.t2, DEFAULT_FLIGHT)?;
                let coherence = self.protocol != ProtocolKind::Distinguish;
                let (t1p, t2p) = if coherence {
                    (self.duration("detection.t1p", d.t1p, DEFAULT_ZONE_GAP)?, self.duration("detection.t2p", d.t2p, DEFAULT_ZONE_GAP)?)
                } else {
                    (0.0, 0.0)
                };
                let t_prime = self.duration("detection.t_prime", d.t_prime, 0.0)?;
                let t_prime = if d.t_prime.is_some() { t_prime } else { t1 + t1p + DEFAULT_CLEARANCE / params.g };
                if t_prime < t1 + t1p {
                    return Err(ConfigError::new(
                        "detection.t_prime",
                        format!("{t_prime} s leaves no time for probe 1 to clear the zones ({} s)", t1 + t1p),
                    ));
                }
                CoherenceSchedule {
                    detection: DistinctionSchedule { p, phi: d.phi, m: d.m, t1, t2, t_prime, params },
                    t1p,
                    t2p,
                    gamma: d.gamma,
                }
            }
        };
        schedule.validate().map_err(|e| core_error("detection", e))?;
        Ok(schedule)
    }
}

fn core_error(section: &str, e: binomcat_core::Error) -> ConfigError {
    match e {
        binomcat_core::Error::Parameter { name, reason } => ConfigError::new(format!("{section}.{name}"), reason),
        other => ConfigError::new(section, other),
    }
}

/// Schedules built from a validated config.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub generation: Option<GenerationSchedule>,
    /// Probe schedule; its `t1p`/`t2p` are zero for distinguish runs.
    pub detection: Option<CoherenceSchedule>,
    pub pipeline: Option<FullPipeline>,
}

impl Resolved {
    pub fn distinction(&self) -> Option<DistinctionSchedule> {
        self.detection.map(|c| c.detection)
    }
}
