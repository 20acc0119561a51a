//! The `menusize` experiment harness: subcommands, CSV output with manifests,
//! and SVG plots.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MENUSIZE_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(menusize::Error),
    /// Malformed input files and failed writes.
    Input(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(_) | CliError::Input(_) => EXIT_PRECONDITION,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<menusize::Error> for CliError {
    fn from(e: menusize::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "menusize", version, about = "Menu-size experiments for two-good auctions")]
pub struct Cli {
    /// Output directory (default: $MENUSIZE_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// File of `key=value` lines supplying flags not given on the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact revenue of a menu with a Monte Carlo cross-check.
    Eval(EvalArgs),
    /// Compress a menu by price rounding.
    Round(RoundArgs),
    /// Lower bounds on the revenue gap of a menu under Beta(1,2)^2.
    Certify(CertifyArgs),
    /// Piecewise-linear approximation sweep over delta.
    Plapprox(PlapproxArgs),
    /// Local search for the best menus under size budgets.
    Optimize(OptimizeArgs),
    /// Grid LP optimum, upper bounds and baselines.
    Oracle(OracleArgs),
    /// Hazard-rate condition and per-good Myerson prices.
    Hazard(HazardArgs),
    /// Revenue gap against the menu-size budget.
    Curve(CurveArgs),
    /// Quick invariant suite; exits 0 iff every check passes.
    Selftest(SelftestArgs),
    /// Line plot of CSV columns as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub menu: PathBuf,
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    /// Monte Carlo sample size; 0 skips the cross-check.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundMode {
    Additive,
    Full,
    Multiplicative,
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    #[arg(long)]
    pub menu: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = RoundMode::Additive)]
    pub mode: RoundMode,
    /// Largest value for the multiplicative mode.
    #[arg(long)]
    pub h: Option<f64>,
    /// Drop dominated entries per price level afterwards.
    #[arg(long)]
    pub prune: bool,
    /// Distribution for the revenue report.
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    /// File name of the rounded menu inside the output directory.
    #[arg(long, default_value = "rounded.txt")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub menu: PathBuf,
    /// Strip half-widths for the coarse certificate (repeatable).
    #[arg(long = "delta", default_values_t = [1e-3, 1e-2])]
    pub deltas: Vec<f64>,
    /// Gauss–Legendre nodes per smooth piece (also run with twice as many).
    #[arg(long, default_value_t = 64)]
    pub quad_n: usize,
}

#[derive(Debug, Args)]
pub struct PlapproxArgs {
    #[arg(long = "delta", default_values_t = [1e-6, 1e-7, 1e-8])]
    pub deltas: Vec<f64>,
    /// Contours per adversary family.
    #[arg(long, default_value_t = 50)]
    pub per_family: usize,
    /// Random segments for the per-segment bound.
    #[arg(long, default_value_t = 10_000)]
    pub lemma_segments: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    #[arg(long, default_value_t = 6)]
    pub cmax: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Only allocate good 1.
    #[arg(long)]
    pub single_good: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    #[arg(long, default_value_t = 12)]
    pub n_grid: usize,
}

#[derive(Debug, Args)]
pub struct HazardArgs {
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value = "iid:beta12")]
    pub dist: String,
    #[arg(long, default_value_t = 6)]
    pub cmax: usize,
    #[arg(long, default_value_t = 12)]
    pub n_grid: usize,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub x: String,
    /// Columns to draw against `x` (repeatable).
    #[arg(long, required = true)]
    pub y: Vec<String>,
    #[arg(long)]
    pub loglog: bool,
    #[arg(long)]
    pub title: Option<String>,
    /// SVG path (default: the CSV's stem with `.svg`, in the output directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("menusize: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("menusize: {e}");
            e.exit_code()
        }
    }
}
