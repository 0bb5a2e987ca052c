use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tfqkd::{Scheme, UVariant};

use crate::CliError;

const RANGE_HELP: &str = "Ranges are lo:hi:step and include hi when it lies within half a step of the grid; \
a single number is a one-point range.";

#[derive(Debug, Parser)]
#[command(
    name = "tfqkd",
    version,
    about = "Secret capacity of time-frequency QKD with Gaussian pulses",
    after_help = "Exit codes: 0 success, 1 statistical failure, 2 usage error, 3 numeric failure.\n\
TFQKD_THREADS caps the number of worker threads."
)]
pub struct Cli {
    /// Read defaults from a file of `key = value` lines (keys are flag names; flags on the command line win)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate capacity over an (alpha, beta) grid
    #[command(args_override_self = true, after_help = RANGE_HELP)]
    Surface(SurfaceArgs),
    /// Find the optimal pulse widths for one (M, eps)
    #[command(args_override_self = true)]
    Optimize(OptimizeArgs),
    /// Optimize every (M, eps) pair of two lists
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Check the analytic model against Monte Carlo and the spectral oracle
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
    /// Secret key rate at the optimal widths
    #[command(args_override_self = true)]
    Keyrate(KeyrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    PerTerm,
    WholeSum,
}

impl From<VariantArg> for UVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::PerTerm => UVariant::PerTerm,
            VariantArg::WholeSum => UVariant::WholeSum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Staged,
    Nested,
}

impl From<SchemeArg> for Scheme {
    fn from(v: SchemeArg) -> Self {
        match v {
            SchemeArg::Staged => Scheme::Staged,
            SchemeArg::Nested => Scheme::Nested,
        }
    }
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// Symbols per basis
    #[arg(long)]
    pub m: usize,
    /// Fraction of photons Eve intercepts
    #[arg(long)]
    pub eps: f64,
    /// Symbol-pulse width axis (lo:hi:step)
    #[arg(long, default_value = "0.05:1.5:0.05")]
    pub alpha: String,
    /// Conjugate-pulse width axis (lo:hi:step)
    #[arg(long, default_value = "0.05:1.5:0.05")]
    pub beta: String,
    /// Absolute accuracy of spectral bin masses
    #[arg(long, default_value_t = tfqkd::DEFAULT_ACCURACY)]
    pub accuracy: f64,
    /// Output file (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    /// Overlap functional reading
    #[arg(long, value_enum, default_value = "per-term")]
    pub u_variant: VariantArg,
    /// Order of the alpha and beta searches
    #[arg(long, value_enum, default_value = "staged")]
    pub scheme: SchemeArg,
    /// Alpha search interval (lo:hi)
    #[arg(long, default_value = "0.05:1.5")]
    pub alpha_box: String,
    /// Beta search interval (lo:hi)
    #[arg(long, default_value = "0.05:1.5")]
    pub beta_box: String,
    /// Coarse grid spacing
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Golden-section tolerance
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Absolute accuracy of spectral bin masses
    #[arg(long, default_value_t = tfqkd::DEFAULT_ACCURACY)]
    pub accuracy: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output file (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every evaluated (alpha, beta, capacity) point as CSV
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated symbol counts
    #[arg(long, default_value = "2,4,8,16,32")]
    pub m: String,
    /// Comma-separated eavesdropping fractions, or lo:hi:step
    #[arg(long, default_value = "0,0.25,0.5,0.75,0.9")]
    pub eps: String,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.7)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = tfqkd::DEFAULT_ACCURACY)]
    pub accuracy: f64,
    /// Skip the dense-DFT spectrum comparison
    #[arg(long)]
    pub no_spectrum: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KeyrateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub eps: f64,
    /// Photon repetition rate in Hz
    #[arg(long)]
    pub rep_rate_hz: f64,
    /// Sifted symbol rate in Hz (defaults to the repetition rate)
    #[arg(long)]
    pub sifted_rate_hz: Option<f64>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const SUBCOMMANDS: [&str; 5] = ["surface", "optimize", "sweep", "validate", "keyrate"];

/// Turns the `--config` file into flags placed right after the subcommand,
/// so that anything given explicitly later on the command line overrides it.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key", n + 1)));
        }
        match value {
            "true" => extra.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                extra.push(OsString::from(format!("--{key}")));
                extra.push(OsString::from(value));
            }
        }
    }
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map_or(args.len(), |i| i + 1);
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
