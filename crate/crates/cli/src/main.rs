//! `hofa`: exact and Monte Carlo higher-order Fourier analysis over F_p^n.
//!
//! Exit codes: 0 success, 2 validation error, 64 unknown command, 65
//! malformed input file, 66 exact budget exceeded without `--mc`.

mod commands;
mod error;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, ErrorKind, EXIT_OK, EXIT_UNKNOWN_COMMAND, EXIT_VALIDATION};
use report::Format;

/// Worker threads; overridden by `--threads`.
pub const ENV_THREADS: &str = "HOFA_THREADS";
/// Exact enumeration budget in points; overridden by `--budget`.
pub const ENV_BUDGET: &str = "HOFA_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "hofa", version, about = "Higher-order Fourier analysis over F_p^n")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of points an exact enumeration may visit.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Worker threads (default: HOFA_THREADS, then the number of cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Monte Carlo samples used when an exact computation exceeds the budget.
    #[arg(long, global = true, value_name = "SAMPLES", conflicts_with = "exact")]
    pub mc: Option<u64>,
    /// Never fall back to sampling.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Report path (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gowers U^k norm of a function table.
    Gowers(GowersArgs),
    /// Linear-form averages, flagged averages and boundary functions.
    Average(AverageArgs),
    /// Complexity, components, isomorphism and flagged products of systems.
    System(SystemArgs),
    /// Fourier spectrum of a function table.
    Fourier(TableArg),
    /// Energy-increment decomposition f = E(f|B) + residual.
    Decompose(DecomposeArgs),
    /// Verified rank boundary of a polynomial or a set of polynomials.
    Rank(RankArgs),
    /// Correlation testers.
    #[command(subcommand)]
    Test(TestCommand),
    /// Linear independence of t_L over a family of systems.
    Interior(InteriorArgs),
    /// Distributional lift of a [0,1]-valued table and its concentration.
    Distributional(DistributionalArgs),
}

#[derive(Args, Debug)]
pub struct TableArg {
    #[arg(long)]
    pub table: PathBuf,
}

#[derive(Args, Debug)]
pub struct GowersArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

#[derive(Args, Debug)]
pub struct AverageArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// One table applied to every form.
    #[arg(long, conflicts_with = "per_form")]
    pub table: Option<PathBuf>,
    /// One table per form, in form order.
    #[arg(long = "per-form", num_args = 1..)]
    pub per_form: Vec<PathBuf>,
    /// Coefficients β: form i reads e(β_i f) (field tables) or f^β_i.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<u8>>,
    /// Output the flagged average f^{L,M} (the system file needs a flag).
    #[arg(long, conflicts_with = "boundary")]
    pub flagged: bool,
    /// Output the boundary function f^{∂L}.
    #[arg(long)]
    pub boundary: bool,
}

#[derive(Args, Debug)]
pub struct SystemArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub cs_complexity: bool,
    #[arg(long)]
    pub true_complexity: bool,
    #[arg(long)]
    pub components: bool,
    /// Decide isomorphism with another system (flags are compared when both have one).
    #[arg(long, value_name = "SYSTEM")]
    pub isomorphic_to: Option<PathBuf>,
    /// Flagged product with another flagged system.
    #[arg(long, value_name = "SYSTEM")]
    pub product_with: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long)]
    pub homogeneous: bool,
    #[arg(long, default_value_t = hofa_core::factors::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RankMethodArg {
    Auto,
    Exhaustive,
    Quadratic,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Polynomial files; more than one computes the rank of the set.
    #[arg(long = "poly", required = true, num_args = 1..)]
    pub polys: Vec<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub r_max: usize,
    #[arg(long, value_enum, default_value_t = RankMethodArg::Auto)]
    pub method: RankMethodArg,
}

#[derive(Subcommand, Debug)]
pub enum TestCommand {
    /// Sampled U^{d+1} uniformity test of e_p(f) for a field-valued table.
    Uniformity(UniformityArgs),
    /// Run a tester described by a JSON file.
    Generic(GenericArgs),
    /// Compare a tester with its affine symmetrization on the same table.
    Symmetrize(GenericArgs),
    /// Linear-form profile of the symmetrized tester.
    Profile(ProfileArgs),
}

#[derive(Args, Debug)]
pub struct UniformityArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub degree: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Args, Debug)]
pub struct GenericArgs {
    #[arg(long)]
    pub tester: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Apply this many random affine maps to each query tuple.
    #[arg(long, default_value_t = 0)]
    pub symmetrize: u32,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(long)]
    pub tester: PathBuf,
    /// Evaluate the profile on this table and compare with exact acceptance.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GateArg {
    Enforce,
    Report,
}

#[derive(Args, Debug)]
pub struct InteriorArgs {
    #[arg(long = "system", required = true, num_args = 1..)]
    pub systems: Vec<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = GateArg::Enforce)]
    pub gate: GateArg,
}

#[derive(Args, Debug)]
pub struct DistributionalArgs {
    /// Real table with values in [0, 1].
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<u8>,
    /// Number of sampled functions for the concentration experiment.
    #[arg(long, default_value_t = 200)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

fn emit_error(e: &CliError) -> i32 {
    let doc = serde_json::json!({ "schema_version": input::SCHEMA_VERSION, "exit_code": e.exit_code(), "error": e });
    eprintln!("{doc}");
    e.exit_code()
}

fn run(argv: Vec<std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                K::InvalidSubcommand => {
                    let _ = e.print();
                    emit_error(&CliError::new(ErrorKind::UnknownCommand, e.to_string().lines().next().unwrap_or_default()));
                    EXIT_UNKNOWN_COMMAND
                }
                _ => {
                    let _ = e.print();
                    emit_error(&CliError::validation(e.to_string().lines().next().unwrap_or_default()));
                    EXIT_VALIDATION
                }
            };
        }
    };
    match commands::execute(&cli.global, cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => emit_error(&e),
    }
}

fn main() -> ExitCode {
    let code = run(std::env::args_os().collect());
    ExitCode::from(code as u8)
}
