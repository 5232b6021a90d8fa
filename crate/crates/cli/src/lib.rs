//! Experiment runner behind the `cherry` binary: loads a JSON config, runs
//! one subcommand and writes its CSV files plus a `summary.json`.

// Negated comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::commands::Run;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tune,
    Alpha,
    Bounds,
    Gamma,
    Orbit,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tune => "tune",
            Command::Alpha => "alpha",
            Command::Bounds => "bounds",
            Command::Gamma => "gamma",
            Command::Orbit => "orbit",
            Command::Report => "report",
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// Runs `cmd` and returns the directory written to.
pub fn execute(cmd: Command, config: &Path, out: Option<&Path>, precision_override: Option<u32>) -> Result<PathBuf, CliError> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(bits) = precision_override {
        if bits < 64 {
            return Err(CliError::config("--precision-override", "must be at least 64 bits"));
        }
        cfg.map.precision_bits = bits;
        if let Some(m) = cfg.map.max_precision_bits.as_mut() {
            *m = (*m).max(bits);
        }
    }
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let mut run = Run::new(cfg)?;
    match cmd {
        Command::Tune => run.tune()?,
        Command::Alpha => run.alpha()?,
        Command::Bounds => run.bounds()?,
        Command::Gamma => run.gamma()?,
        Command::Orbit => run.orbit()?,
        Command::Report => run.report()?,
    }

    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    for (name, text) in &run.files {
        write_file(&out, name, text)?;
    }
    let summary = json!({
        "command": cmd.name(),
        "config": run.cfg,
        "precision_bits_used": run.prec_used,
        "results": run.results,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_file(&out, "summary.json", &text)?;
    Ok(out)
}
