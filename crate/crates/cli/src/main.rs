use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use binomcat::output::write_all;
use binomcat::{parse_config, run, ConfigError, RunError, RunOptions};
use clap::Parser;

/// Simulate generation and detection of binomial Schrödinger cats in cavity QED.
#[derive(Debug, Parser)]
#[command(name = "binomcat", version)]
struct Cli {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Maximum worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
    /// Tolerance override, `norm=…`, `fidelity=…` or `timing=…`; repeatable.
    #[arg(long = "tolerance", value_name = "KEY=VALUE")]
    tolerances: Vec<String>,
}

const EXIT_RUN: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error =
                err.downcast_ref::<ConfigError>().is_some() || matches!(err.downcast_ref::<RunError>(), Some(RunError::Config(_)));
            ExitCode::from(if config_error { EXIT_CONFIG } else { EXIT_RUN })
        }
    }
}

fn parse_tolerance(item: &str) -> Result<(&str, f64), ConfigError> {
    let bad = |msg: String| ConfigError::new("--tolerance", msg);
    let (key, value) = item.split_once('=').ok_or_else(|| bad(format!("expected KEY=VALUE, got {item:?}")))?;
    let key = key.trim();
    if !matches!(key, "norm" | "fidelity" | "timing") {
        return Err(bad(format!("unknown key {key:?}; expected norm, fidelity or timing")));
    }
    let value = value.trim().parse().map_err(|e| bad(format!("{key}: {e}")))?;
    Ok((key, value))
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&cli.config).with_context(|| format!("reading {}", cli.config.display()))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    for item in &cli.tolerances {
        let (key, value) = parse_tolerance(item)?;
        match key {
            "norm" => config.tolerances.norm = value,
            "fidelity" => config.tolerances.fidelity = value,
            _ => config.tolerances.timing = value,
        }
    }
    let output = run(&config, &RunOptions { workers: cli.workers })?;
    let written = write_all(&output, &cli.out)?;
    let r = &output.report;
    println!("protocol {} seed {} trials {}", r.protocol, r.seed, r.trials);
    if let Some(g) = &r.generation {
        println!("cavity fidelity {:.6}  ground probability {:.6}", g.cavity_fidelity, g.ground_probability);
    }
    if let Some(d) = &r.detection {
        println!("input {}  expected record probability {:.6}", d.input, d.expected_probability);
    }
    if let Some(p) = &r.pipeline {
        println!("sign {}  single-shot probability {:.6}", p.sign_detection, p.single_shot_probability);
    }
    if let Some(j) = &r.jitter {
        println!("jitter mean fidelity {:.6} (min {:.6})", j.fidelity.mean, j.fidelity.min);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
