#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod check;
mod commands;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Singular minimal surfaces: domes, roofs, Dirichlet solutions and the cone family.
#[derive(Debug, Parser)]
#[command(name = "hanging-surfaces", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rotational dome integrated from the axis, revolved about it.
    Dome(DomeArgs),
    /// Roof over a 2-catenary, revolved about the horizontal axis.
    Roof(RoofArgs),
    /// Dirichlet problem from a JSON problem file.
    Solve(SolveArgs),
    /// Cone-plus-annulus family with an arbitrarily low center of gravity.
    #[command(name = "example-cone")]
    ExampleCone(ConeArgs),
    /// Half-width of the 2-catenary domain.
    Halfwidth(HalfwidthArgs),
    /// Invariant battery over all modules.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct DomeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub u0: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub rmax: f64,
    #[arg(long, default_value_t = 128)]
    pub ntheta: usize,
    /// Reflect the mesh across the plane z = Z.
    #[arg(long, value_name = "Z", allow_hyphen_values = true)]
    pub invert_z: Option<f64>,
    /// Profiles are resampled on this many abscissae before meshing.
    #[arg(long, default_value_t = 257)]
    pub rings: usize,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Axis seed offset; defaults to 1e-4 · u0.
    #[arg(long)]
    pub seed_offset: Option<f64>,
    /// Residuals are sampled for r at or above this value.
    #[arg(long, default_value_t = 0.1)]
    pub residual_rmin: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RoofArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub umin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: Option<f64>,
    /// Keep only the part with A ≤ y ≤ B.
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_hyphen_values = true)]
    pub clip_y: Option<Vec<f64>>,
    #[arg(long, value_name = "Z", allow_hyphen_values = true)]
    pub invert_z: Option<f64>,
    /// Truncation of the open domain; defaults to 1e-3 · a.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long, default_value_t = 129)]
    pub ntheta: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    /// Cone radius; may be repeated.
    #[arg(long = "R", value_name = "R", required_unless_present = "sweep", allow_hyphen_values = true)]
    pub radius: Vec<f64>,
    /// Sweep the default radii from 0.5 down to 0.001.
    #[arg(long, conflicts_with = "radius")]
    pub sweep: bool,
    #[arg(long, default_value_t = 100)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 25)]
    pub n_cone: usize,
    #[arg(long, default_value_t = 25)]
    pub n_annulus: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HalfwidthArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Run every suite (the default when no module is named).
    #[arg(long)]
    pub all: bool,
    /// Restrict to these suites.
    #[arg(long, value_parser = ["profile", "catenary", "surface", "dirichlet", "variational"])]
    pub module: Vec<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HANGING_SURFACES_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("HANGING_SURFACES_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Dome(a) => commands::dome(&a),
        Command::Roof(a) => commands::roof(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::ExampleCone(a) => commands::example_cone(&a),
        Command::Halfwidth(a) => commands::halfwidth(&a),
        Command::Check(a) => check::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return CliError::Usage(e.render().to_string().trim().to_string()).report(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
