//! `geosens`: reproduce the geodesic-ball sensitivity experiments and run
//! custom studies from a config file.
//!
//! Usage:
//!   geosens <experiment> [--config PATH] [--seed U64] [--n N] [--nw NW]
//!           [--mode exact|incomplete:M] [--bootstrap REPS] [--out PATH]
//!           [--format csv|json]
//!
//! Experiments: example1, example2, example3, stiffness, custom.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 degenerate denominator.

mod config;
mod experiments;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{ExperimentConfig, KeyValues, OutputFormat};
use experiments::RunError;

const USAGE: &str = "usage: geosens <example1|example2|example3|stiffness|custom> \
[--config PATH] [--seed U64] [--n N] [--nw NW] [--mode exact|incomplete:M] \
[--bootstrap REPS] [--out PATH] [--format csv|json] [--timing]";

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("geosens: {msg}");
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("geosens: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Run(err @ RunError::Numerical(_))) => {
            eprintln!("geosens: {err}");
            ExitCode::from(3)
        }
        Err(CliError::Run(err @ RunError::DegenerateDenominator(_))) => {
            eprintln!("geosens: {err}");
            ExitCode::from(4)
        }
    }
}

enum CliError {
    Config(String),
    Io(String),
    Run(RunError),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn run() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        println!("{USAGE}");
        return Ok(());
    }
    let experiment_name = args[0].clone();
    let mut config_path: Option<PathBuf> = None;
    let mut overrides: Vec<(&'static str, String)> = Vec::new();
    let mut timing_flag = false;

    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut grab = |name: &str| -> Result<String, CliError> {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Config(format!("flag {name} needs a value")))
        };
        match flag.as_str() {
            "--config" => config_path = Some(PathBuf::from(grab("--config")?)),
            "--seed" => overrides.push(("seed", grab("--seed")?)),
            "--n" => overrides.push(("n", grab("--n")?)),
            "--nw" => overrides.push(("nw", grab("--nw")?)),
            "--mode" => overrides.push(("mode", grab("--mode")?)),
            "--bootstrap" => overrides.push(("bootstrap_reps", grab("--bootstrap")?)),
            "--out" => overrides.push(("out", grab("--out")?)),
            "--format" => overrides.push(("format", grab("--format")?)),
            "--timing" => timing_flag = true,
            other => return Err(CliError::Config(format!("unknown flag '{other}'"))),
        }
    }

    let mut kv = match &config_path {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    for (key, value) in overrides {
        kv.set(key, value);
    }
    if timing_flag {
        kv.set("timing", "on".into());
    }

    let cfg = ExperimentConfig::from_keys(&experiment_name, &kv)?;
    let rows = experiments::run(&cfg).map_err(CliError::Run)?;

    let mut buffer = Vec::new();
    let write_result = match cfg.format {
        OutputFormat::Csv => output::write_csv(&rows, &mut buffer),
        OutputFormat::Json => output::write_json(&rows, &mut buffer),
    };
    write_result.map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;

    match &cfg.out {
        Some(path) => std::fs::write(path, &buffer)
            .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?,
        None => std::io::stdout()
            .write_all(&buffer)
            .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))?,
    }
    Ok(())
}
