mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use spherosim::error::Error;
use spherosim::minimizer::MinimizeOptions;

use config::{Groups, Vec3Arg};

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "spherosim", version, about = "Spinning skyrmions on the sphere: fields, dynamics, minimization and checks")]
pub struct Cli {
    /// Worker threads (results are reproducible at a fixed count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with flat keys for the subcommand; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for relative output paths.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the icosphere as an OFF file.
    Mesh(MeshArgs),
    /// Print energy, charge and momenta of a field as one CSV row.
    Diagnose(DiagnoseArgs),
    /// Build the trial field on the mesh and compare with the radial quadrature.
    Trial(TrialArgs),
    /// Radial quadrature of an equivariant profile.
    Oracle(OracleArgs),
    /// Landau-Lifshitz evolution with a conservation trace.
    Evolve(EvolveArgs),
    /// Free or angular-momentum-constrained energy minimization.
    Minimize(MinimizeArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Version, file formats and mesh sizes.
    Info,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct MeshArgs {
    #[arg(long)]
    pub level: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// hedgehog, antihedgehog, constant, trial, random, random-q1 or perturbed.
    #[arg(long, conflicts_with = "load_field")]
    pub field: Option<String>,
    /// Trial core scale.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub load_field: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct TrialArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Core scale; the lowest-energy grid value if absent.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub save_field: Option<PathBuf>,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct OracleArgs {
    /// trial or identity.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, conflicts_with = "load_field")]
    pub field: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub load_field: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// rk4 or midpoint.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub save_trace: Option<PathBuf>,
    #[arg(long)]
    pub save_field: Option<PathBuf>,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// `jx,jy,jz`; free minimization if absent.
    #[arg(long, allow_hyphen_values = true)]
    pub j_target: Option<Vec3Arg>,
    /// Trial core scale of the seed.
    #[arg(long)]
    pub seed_eps: Option<f64>,
    /// JSON file with minimizer options.
    #[arg(long)]
    pub opts: Option<PathBuf>,
    /// Start from this field instead of the trial seed.
    #[arg(long)]
    pub load_field: Option<PathBuf>,
    #[arg(long)]
    pub save_field: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated groups (1..=14); all if absent.
    #[arg(long)]
    pub groups: Option<Groups>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub evolve_t_end: Option<f64>,
    #[arg(long)]
    pub j_target_factor: Option<f64>,
    /// Minimizer options; config file only.
    #[arg(skip)]
    pub minimize: Option<MinimizeOptions>,
}

/// Exit code for a library error: bad input is 1, numerical trouble 2.
pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::LevelOutOfRange(_)
        | Error::NonUnitDirection(_)
        | Error::EpsilonOutOfRange(_)
        | Error::NotARotation { .. }
        | Error::TargetTooSmall(_)
        | Error::InvalidInput(_)
        | Error::Io(_)
        | Error::SouthPoleSingularity
        | Error::ProfileOutOfRange(_) => EXIT_INVALID,
        Error::DegenerateBlend(_)
        | Error::IllConditionedTriangle { .. }
        | Error::UnsupportedTail(_)
        | Error::NotEquivariant(_)
        | Error::MidpointNoConvergence(_)
        | Error::TargetUnreachable(_)
        | Error::TopologicalSectorChange(_)
        | Error::MaxIterations(_)
        | Error::RouteMismatch { .. } => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            // clap prints help and usage errors itself
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or(EXIT_INVALID, exit_code_for);
            ExitCode::from(code)
        }
    }
}
