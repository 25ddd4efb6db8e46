//! `windlq`: synthesize, simulate and compare robust LQ power-tracking
//! controllers from a scenario file.
//!
//! Log verbosity follows the `WINDLQ_LOG` environment variable
//! (`error`, `warn`, `info`, `debug`, `trace`; default `warn`).

mod commands;
mod plot;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use windlq::sim::ControllerKind;

#[derive(Debug, Parser)]
#[command(name = "windlq", version, about = "Robust LQ active-power tracking for wind turbines")]
pub struct Cli {
    /// Scenario JSON file; the built-in default scenario if omitted.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario's simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the scenario's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Re-read and check every emitted file before exiting.
    #[arg(long, global = true)]
    pub validate: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design region-2 and region-3 gains and certify them.
    Synthesize,
    /// Run one closed-loop simulation and evaluate it.
    Simulate {
        /// Controller to run instead of the scenario's.
        #[arg(long, value_enum)]
        controller: Option<ControllerArg>,
    },
    /// Simulate two configurations and tabulate metric deltas.
    Compare {
        /// Second scenario. Without it the scenario is compared against
        /// itself with the other controller kind.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Operating point for a wind speed.
    Equilibrium(PointArgs),
    /// Jacobians of the augmented dynamics at an operating point.
    Linearize(PointArgs),
    /// Damage-equivalent loads of a stored trajectory.
    Del {
        /// Trajectory CSV written by `simulate`.
        #[arg(long)]
        trajectory: PathBuf,
        /// Also write the rainflow cycles of each channel.
        #[arg(long)]
        cycles: bool,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct PointArgs {
    /// Wind speed (m/s).
    #[arg(long)]
    pub wind: f64,
    /// Desired generator speed (rad/s); from the power-speed table if omitted.
    #[arg(long)]
    pub omega_d: Option<f64>,
    /// Desired power (W); from the scenario's reference if omitted.
    #[arg(long)]
    pub p_d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ControllerArg {
    RobustLq,
    Baseline,
}

impl From<ControllerArg> for ControllerKind {
    fn from(c: ControllerArg) -> Self {
        match c {
            ControllerArg::RobustLq => ControllerKind::RobustLq,
            ControllerArg::Baseline => ControllerKind::Baseline,
        }
    }
}

/// Exit status for an error chain.
fn exit_code(err: &anyhow::Error) -> u8 {
    use windlq::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<windlq::Error>() {
            return match e {
                E::Validation(_) | E::Parse { .. } | E::Parameters(_) | E::Surface(_) | E::Synthesis(_) => 2,
                E::Infeasible(_) | E::CertificationFailure(_) | E::NumericalFailure(_) => 3,
                E::SimulationAbort { .. } => 4,
                _ => 1,
            };
        }
        if cause.downcast_ref::<validate::Invalid>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WINDLQ_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
