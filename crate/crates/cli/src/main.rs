//! `ridge-split`: decompose sums of ridge functions into smooth profiles and
//! check plane-wave solutions of constant-coefficient operators.
//!
//! Every run ends with one JSON record on stdout. Exit status: 0 success,
//! 1 verification failure, 2 input or format error, 3 representability defect.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ridgesplit::geometry::DEFAULT_TOL_INDEP;
use ridgesplit::Method;

#[derive(Parser, Debug)]
#[command(name = "ridge-split", version, about = "Smooth ridge-function decomposition and plane-wave checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a direction list is pairwise independent.
    CheckDirs(CheckDirsArgs),
    /// Split F into smooth profiles along the given directions.
    Decompose(DecomposeArgs),
    /// Recheck a stored decomposition against F on a fresh grid.
    Verify(VerifyArgs),
    /// Iterated increment of F along the direction perpendiculars.
    RidgeDefect(RidgeDefectArgs),
    /// Plane-wave operators: residual checks and explicit solutions.
    Pde {
        #[command(subcommand)]
        mode: PdeCommand,
    },
}

#[derive(Subcommand, Debug)]
enum PdeCommand {
    /// Apply the operator to u and compare the residual with the tolerance.
    Verify(PdeVerifyArgs),
    /// Sample the sum of plane waves v_i along the operator's wave directions.
    Solve(PdeSolveArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Symbolic,
    Numeric,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Symbolic => Method::Symbolic,
            MethodArg::Numeric => Method::Numeric,
        }
    }
}

/// Where F comes from: an expression in x and y, or a samples table.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// Expression in x and y, e.g. "sin(x)+exp(y)".
    #[arg(long = "f", value_name = "EXPR")]
    expr: Option<String>,
    /// CSV table with header x,y,f forming a complete uniform grid.
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

/// Like [`Source`], but may be omitted.
#[derive(Args, Debug, Clone)]
#[group(required = false, multiple = false)]
struct OptionalSource {
    /// Expression in x and y. Defaults to the expression stored in the file.
    #[arg(long = "f", value_name = "EXPR")]
    expr: Option<String>,
    /// CSV table with header x,y,f.
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckDirsArgs {
    /// Directions as "a,b;a,b;...".
    #[arg(long)]
    dirs: String,
    #[arg(long, default_value_t = DEFAULT_TOL_INDEP)]
    tol_indep: f64,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    dirs: String,
    /// "x0,x1,y0,y1". Defaults to the sample grid's extent, or [-1,1]^2.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Nodes per profile.
    #[arg(long, default_value_t = 1025)]
    grid: usize,
    /// Defaults to symbolic for expressions and numeric for samples.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, default_value = "decomposition.json")]
    out: PathBuf,
    /// Write profile_<i>.dat and surface.dat into this directory.
    #[arg(long, value_name = "DIR")]
    emit_plot_data: Option<PathBuf>,
    /// Indices of the two directions mapped to the coordinate axes, "i,j".
    #[arg(long)]
    axis_pair: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL_INDEP)]
    tol_indep: f64,
    /// Number of continuous derivatives F is known to have.
    #[arg(long)]
    smoothness: Option<u32>,
    /// Overrides the per-stage residual tolerance.
    #[arg(long)]
    stage_tol: Option<f64>,
    /// Allow finite differences above order 2 on sampled data.
    #[arg(long)]
    allow_high_order_fd: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    decomposition: PathBuf,
    #[command(flatten)]
    source: OptionalSource,
    /// Points per side of the check grid; must differ from the stored one.
    #[arg(long)]
    grid: Option<usize>,
    /// Relative tolerance on sup |F - reconstruction| / (1 + sup |F|).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct RidgeDefectArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    dirs: String,
    /// One increment length per direction, "d1,d2,...".
    #[arg(long)]
    deltas: String,
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = 41)]
    grid: usize,
    /// Relative tolerance on the defect, scaled by 1 + sup |F|.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_TOL_INDEP)]
    tol_indep: f64,
}

#[derive(Args, Debug)]
struct PdeVerifyArgs {
    /// Operator factors (alpha,beta) of prod (alpha d/dx + beta d/dy).
    #[arg(long, allow_hyphen_values = true)]
    factors: String,
    #[command(flatten)]
    source: PdeSource,
    /// Also split u into plane waves and check the reconstructed sum.
    #[arg(long)]
    corollary: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Points per side of the residual grid.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Profile nodes for the --corollary decomposition.
    #[arg(long, default_value_t = 1025)]
    decompose_grid: usize,
    #[arg(long)]
    smoothness: Option<u32>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct PdeSource {
    /// Candidate solution in x and y.
    #[arg(long = "u", value_name = "EXPR")]
    expr: Option<String>,
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PdeSolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    factors: String,
    /// One profile in t per factor, "v1;v2;...".
    #[arg(long = "v", allow_hyphen_values = true)]
    profiles: String,
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// CSV with header x,y,f.
    #[arg(long, default_value = "solution.csv")]
    out: PathBuf,
}

fn configure_threads() {
    if let Ok(text) = std::env::var("RIDGE_SPLIT_THREADS") {
        match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring RIDGE_SPLIT_THREADS={text:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let (name, result) = match cli.command {
        Command::CheckDirs(a) => ("check-dirs", commands::check_dirs(&a)),
        Command::Decompose(a) => ("decompose", commands::decompose(&a)),
        Command::Verify(a) => ("verify", commands::verify(&a)),
        Command::RidgeDefect(a) => ("ridge-defect", commands::ridge_defect(&a)),
        Command::Pde { mode: PdeCommand::Verify(a) } => ("pde verify", commands::pde_verify(&a)),
        Command::Pde { mode: PdeCommand::Solve(a) } => ("pde solve", commands::pde_solve(&a)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            report::emit_error(name, &err);
            ExitCode::from(err.code)
        }
    }
}
