//! `cherry`: runs one experiment from a JSON config and writes its CSV
//! files plus a `summary.json` into the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use cherry_cli::{execute, Command};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cherry", version, about = "Flat-interval circle map and Cherry-flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Tune the critical value to the target rotation number; writes params.json.
    Tune(Flags),
    /// Preimage geometry, α_n, θ_n and the empirical gap-inequality constant.
    Alpha(Flags),
    /// Synthetic and measured checks of the θ bound, its corollary and the ratio sequence.
    Bounds(Flags),
    /// Saddle-mass estimate and occupation times along a time grid.
    Gamma(Flags),
    /// Orbit order against the rotation, a flow segment and the ∫τ dμ estimate.
    Orbit(Flags),
    /// Every stage the config has a block for.
    Report(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replaces `map.precision_bits`.
    #[arg(long, value_name = "BITS")]
    precision_override: Option<u32>,
}

fn main() -> ExitCode {
    let (cmd, flags) = match Cli::parse().command {
        Sub::Tune(f) => (Command::Tune, f),
        Sub::Alpha(f) => (Command::Alpha, f),
        Sub::Bounds(f) => (Command::Bounds, f),
        Sub::Gamma(f) => (Command::Gamma, f),
        Sub::Orbit(f) => (Command::Orbit, f),
        Sub::Report(f) => (Command::Report, f),
    };
    match execute(cmd, &flags.config, flags.out.as_deref(), flags.precision_override) {
        Ok(out) => {
            eprintln!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
