//! Configuration-driven front end: run scenarios, recompute observables,
//! perform rescaling analyses and run the built-in validation suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 validation failure.

mod overrides;
mod rescale_cmd;
mod simulate;
mod validate;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "equiflow",
    about = "Equivariant curve-flow laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and persist the trajectory.
    Simulate {
        /// Path to the scenario JSON config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory override (defaults to the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dot-path config overrides, e.g. --override flow.cfl=0.1
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Seed for perturbation randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the observables CSV from a stored trajectory.
    Observe {
        /// Trajectory directory produced by simulate.
        #[arg(long)]
        trajectory: PathBuf,
        /// Output CSV path (defaults to observables.csv inside the directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-snapshot angle profiles (JSON arrays parallel to
        /// the snapshot node arrays) to this path.
        #[arg(long)]
        angles: Option<PathBuf>,
    },
    /// Tangent-flow rescaling analysis of a stored trajectory.
    Rescale {
        /// Trajectory directory produced by simulate.
        #[arg(long)]
        trajectory: PathBuf,
        /// Rescaling schedule.
        #[arg(long, value_parser = ["dyadic", "area-normalized"], default_value = "area-normalized")]
        schedule: String,
        /// Number of schedule entries (dyadic levels or area-normalized picks).
        #[arg(long, default_value_t = 8)]
        count: u32,
        /// Fit/regularity annulus as "r_in,r_out" on the rescaled curve.
        #[arg(long, default_value = "0.2,1.0")]
        annulus: String,
        /// Optional Type-II point-picking grid, e.g. --type2-grid 4,8,16
        #[arg(long)]
        type2_grid: Option<String>,
        /// Report path (defaults to rescale_report.json inside the directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in validation suite.
    Validate {
        /// List the checks without running them.
        #[arg(long)]
        list: bool,
        /// Dot-path overrides applied to the internal check configs,
        /// e.g. --override flow.cfl=5.0 to inject a fault.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            config,
            out,
            overrides,
            seed,
        } => simulate::run(&config, out.as_deref(), &overrides, seed),
        Command::Observe {
            trajectory,
            out,
            angles,
        } => simulate::observe(&trajectory, out.as_deref(), angles.as_deref()),
        Command::Rescale {
            trajectory,
            schedule,
            count,
            annulus,
            type2_grid,
            out,
        } => rescale_cmd::run(
            &trajectory,
            &schedule,
            count,
            &annulus,
            type2_grid.as_deref(),
            out.as_deref(),
        ),
        Command::Validate { list, overrides } => validate::run(list, &overrides),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Maps an error chain onto the documented exit codes.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<equiflow::Error>() {
        match e {
            equiflow::Error::StepFailure { .. } => EXIT_NUMERICAL,
            equiflow::Error::DegenerateSpacing { .. } | equiflow::Error::SymmetryBroken { .. } => {
                EXIT_NUMERICAL
            }
            _ => EXIT_CONFIG,
        }
    } else {
        EXIT_CONFIG
    }
}
