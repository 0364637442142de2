//! Command-line front end: `correct`, `apply`, `verify`, `metrics`,
//! `spectrum`, `synth` and `bench`.
//!
//! Exit codes: 0 success, 2 bounds not met (non-convergence or a failed
//! verification), 3 validation, 4 I/O, 5 archive format.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualbound::ingest::ByteOrder;
use dualbound::Precision;

mod commands;
mod input;

pub use commands::BenchRow;

#[derive(Debug, Parser)]
#[command(name = "dualbound", version, about = "Dual-domain error-bound correction for lossy-compressed fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an edits archive that brings a reconstruction inside both bounds.
    Correct(CorrectArgs),
    /// Add the edits of an archive to a decompressed field.
    Apply(ApplyArgs),
    /// Check a corrected field against spatial and frequency bounds.
    Verify(VerifyArgs),
    /// PSNR, SSNR, maximum spatial error and maximum relative frequency error.
    Metrics(MetricsArgs),
    /// Radially binned power spectrum as CSV.
    Spectrum(SpectrumArgs),
    /// Write a seeded synthetic field.
    Synth(SynthArgs),
    /// Compare base only, trial-and-error tuning and base plus correction.
    Bench(BenchArgs),
}

/// Shape and encoding of raw inputs. Without `--dims`, a `PATH.desc`
/// sidecar next to each input is read instead.
#[derive(Debug, Clone, Args)]
pub struct Layout {
    /// Extents, slowest axis first, e.g. `64x64x64`.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long, value_enum, default_value_t = Dtype::F32)]
    pub dtype: Dtype,
    #[arg(long, value_enum, default_value_t = Endian::Little)]
    pub byte_order: Endian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dtype {
    F32,
    F64,
}

impl From<Dtype> for Precision {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::F32 => Precision::F32,
            Dtype::F64 => Precision::F64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Endian {
    Little,
    Big,
}

impl From<Endian> for ByteOrder {
    fn from(e: Endian) -> Self {
        match e {
            Endian::Little => ByteOrder::Little,
            Endian::Big => ByteOrder::Big,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Base {
    /// Built-in uniform quantizer applied to `--original`.
    Quantizer,
    /// Reconstruction read from `--decompressed`.
    Files,
}

/// Spatial bound plus either a frequency bound or a power-spectrum target.
#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Absolute spatial bound E.
    #[arg(long, conflicts_with = "eps_rel")]
    pub eps: Option<f64>,
    /// Spatial bound in percent of the original's value range.
    #[arg(long)]
    pub eps_rel: Option<f64>,
    /// Absolute frequency bound on Re and Im of every coefficient.
    #[arg(long, conflicts_with_all = ["delta_rel", "rho"])]
    pub delta: Option<f64>,
    /// Frequency bound in percent of the original's largest spectral magnitude.
    #[arg(long, conflicts_with = "rho")]
    pub delta_rel: Option<f64>,
    /// Relative power-spectrum tolerance; derives per-coefficient bounds.
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CorrectArgs {
    #[arg(long)]
    pub original: PathBuf,
    /// Required with `--base files`.
    #[arg(long)]
    pub decompressed: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub base: Option<Base>,
    #[command(flatten)]
    pub layout: Layout,
    #[command(flatten)]
    pub bounds: BoundArgs,
    /// Quantization code length in bits.
    #[arg(long, default_value_t = 16)]
    pub m: u8,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Archive output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the corrected field.
    #[arg(long)]
    pub corrected: Option<PathBuf>,
    /// With `--base quantizer`, also write the base reconstruction.
    #[arg(long)]
    pub write_decompressed: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub decompressed: PathBuf,
    /// Defaults to the archive's extents; a different value is rejected.
    #[arg(long)]
    pub dims: Option<String>,
    /// Defaults to the archive's precision.
    #[arg(long, value_enum)]
    pub dtype: Option<Dtype>,
    #[arg(long, value_enum, default_value_t = Endian::Little)]
    pub byte_order: Endian,
    /// When given, the result is verified against the archive's bounds.
    #[arg(long)]
    pub original: Option<PathBuf>,
    /// Corrected field output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Precision of the written field. `f64` keeps the corrected sum exact.
    #[arg(long, value_enum)]
    pub out_dtype: Option<Dtype>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub corrected: PathBuf,
    #[command(flatten)]
    pub layout: Layout,
    /// Precision of `--corrected` when it differs from `--dtype`.
    #[arg(long, value_enum)]
    pub corrected_dtype: Option<Dtype>,
    /// Take the bounds from this archive instead of the bound flags.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: BoundArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long, alias = "decompressed")]
    pub reconstructed: PathBuf,
    #[command(flatten)]
    pub layout: Layout,
    /// Precision of `--reconstructed` when it differs from `--dtype`.
    #[arg(long, value_enum)]
    pub reconstructed_dtype: Option<Dtype>,
    /// Write `metric,value` CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long, alias = "field")]
    pub original: PathBuf,
    /// Adds the reconstructed spectrum and the ratio column.
    #[arg(long, alias = "decompressed")]
    pub reconstructed: Option<PathBuf>,
    #[command(flatten)]
    pub layout: Layout,
    #[arg(long, value_enum)]
    pub reconstructed_dtype: Option<Dtype>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// `white-noise`, `power-law:ALPHA`, `exponential:K0`, `impulse` or `constant`.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub dims: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Dtype::F32)]
    pub dtype: Dtype,
    #[arg(long, value_enum, default_value_t = Endian::Little)]
    pub byte_order: Endian,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write `OUT.desc`.
    #[arg(long)]
    pub sidecar: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Field to compress; alternatively `--synth`.
    #[arg(long, conflicts_with = "synth")]
    pub original: Option<PathBuf>,
    /// Generate the field instead, e.g. `white-noise`; needs `--dims`.
    #[arg(long)]
    pub synth: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Reconstruction for `--base files`.
    #[arg(long)]
    pub decompressed: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Base::Quantizer)]
    pub base: Base,
    #[command(flatten)]
    pub layout: Layout,
    #[command(flatten)]
    pub bounds: BoundArgs,
    #[arg(long, default_value_t = 0.5)]
    pub shrink_factor: f64,
    #[arg(long, default_value_t = 16)]
    pub m: u8,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The bounds are not met: non-convergence or failed verification.
    BoundsNotMet,
}

#[derive(Debug)]
pub enum CliError {
    Core(dualbound::Error),
    Usage(clap::Error),
    Output(std::io::Error),
}

impl From<dualbound::Error> for CliError {
    fn from(e: dualbound::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(std::io::Error::other(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Output(e) => write!(f, "output error: {e}"),
        }
    }
}

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_BOUNDS_NOT_MET: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_FORMAT: u8 = 5;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use dualbound::Error as E;
        match self {
            CliError::Core(E::Io { .. } | E::SizeMismatch { .. }) | CliError::Output(_) => EXIT_IO,
            CliError::Core(E::Format(_)) => EXIT_FORMAT,
            CliError::Core(_) => EXIT_VALIDATION,
            CliError::Usage(e) if !e.use_stderr() => EXIT_SUCCESS,
            CliError::Usage(_) => EXIT_VALIDATION,
        }
    }
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => EXIT_SUCCESS,
            Status::BoundsNotMet => EXIT_BOUNDS_NOT_MET,
        }
    }
}

/// Parse `args` (program name first) and run the command, writing reports
/// to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<Status, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::Usage)?;
    match cli.command {
        Command::Correct(a) => commands::correct(&a, out),
        Command::Apply(a) => commands::apply(&a, out),
        Command::Verify(a) => commands::verify(&a, out),
        Command::Metrics(a) => commands::metrics(&a, out),
        Command::Spectrum(a) => commands::spectrum(&a, out),
        Command::Synth(a) => commands::synth(&a, out),
        Command::Bench(a) => commands::bench(&a, out),
    }
}
