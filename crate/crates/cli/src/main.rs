use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod report;

use report::{CliError, Output};

/// Rank-one, skew-product and substitution systems: correlations,
/// rigidity constants and spectral diagnostics.
#[derive(Parser, Debug)]
#[command(name = "rigidity", version)]
struct Cli {
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Primitive substitutions.
    #[command(subcommand)]
    Subst(SubstCmd),
    /// Rank-one cutting-and-stacking maps.
    #[command(subcommand)]
    Rankone(RankOneCmd),
    /// The Mathew-Nadkarni skew product over the dyadic odometer.
    #[command(subcommand)]
    Skew(SkewCmd),
    /// Diagnostics on correlation sequences and weak-limit coefficients.
    #[command(subcommand)]
    Spectral(SpectralCmd),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the numeric series as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SubstCmd {
    /// Composition matrix, Perron data, block frequencies, rigidity constant.
    Analyze(SubstAnalyze),
    /// Empirical self-correlation of a block along a fixed-point prefix.
    Correlate(SubstCorrelate),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SubstAnalyze {
    /// Preset (rudin-shapiro, three-letter, fibonacci) or a rule file.
    pub system: String,
    #[arg(long, default_value_t = rigidity::substitution::DEFAULT_TOL)]
    pub tol: f64,
    /// Prefix length for empirical block frequencies.
    #[arg(long, default_value_t = 1 << 16)]
    pub prefix: usize,
    /// Reference value of the rigidity constant to compare against.
    #[arg(long)]
    pub reference_alpha: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SubstCorrelate {
    pub system: String,
    /// The block, as digits (`00`) or comma-separated letters.
    #[arg(long)]
    pub block: String,
    /// Comma-separated shifts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shifts: Vec<usize>,
    #[arg(long, default_value_t = 1 << 16)]
    pub prefix: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum RankOneCmd {
    /// Tower heights h_0, …, h_{N−1} and exact masses.
    Heights(RankOneHeights),
    /// μ(T^m A ∩ A) for a union A of levels.
    Correlate(RankOneCorrelate),
    /// Weights of the weak limit of T^{h_n}.
    Weaklimit(RankOneWeakLimit),
    /// Certified rigidity lower bound over level sets and shifts h_n.
    Rigidity(RankOneRigidity),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RankOneHeights {
    /// Preset (chacon, historical, staircase:<p>) or a schedule file.
    pub system: String,
    #[arg(long, default_value_t = 10)]
    pub stages: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RankOneCorrelate {
    pub system: String,
    /// Stage N whose column is used.
    #[arg(long, default_value_t = 12)]
    pub stages: usize,
    /// Stage k of the level set.
    #[arg(long, default_value_t = 2)]
    pub level_stage: usize,
    /// Comma-separated levels, or `all`.
    #[arg(long, default_value = "all")]
    pub levels: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub shifts: Vec<u128>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RankOneWeakLimit {
    pub system: String,
    /// Stage N whose column is used; must exceed `--to`.
    #[arg(long, default_value_t = 24)]
    pub stages: usize,
    #[arg(long, default_value_t = 4)]
    pub level_stage: usize,
    #[arg(long, default_value_t = 0)]
    pub level: u128,
    /// First time index n (times are h_n).
    #[arg(long, default_value_t = 8)]
    pub from: usize,
    #[arg(long, default_value_t = 12)]
    pub to: usize,
    #[arg(long, default_value_t = 4)]
    pub j_max: u128,
    /// Also write the coefficients in the `spectral beurling` input format.
    #[arg(long)]
    pub coefficients_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RankOneRigidity {
    pub system: String,
    #[arg(long, default_value_t = 17)]
    pub stages: usize,
    #[arg(long, default_value_t = 4)]
    pub level_stage: usize,
    /// Shifts are h_n for n in this range, `a..b` (inclusive).
    #[arg(long, default_value = "6..10")]
    pub shift_stages: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SkewSystemArgs {
    /// `mathew-nadkarni` or a JSON step-cocycle file.
    #[arg(long, default_value = "mathew-nadkarni")]
    pub system: String,
    #[arg(long, default_value_t = rigidity::skew::DEFAULT_ATOM_LEVEL)]
    pub atom_level: u32,
    #[arg(long, default_value_t = rigidity::skew::DEFAULT_CUTOFF)]
    pub cutoff: u32,
}

#[derive(Subcommand, Debug)]
pub enum SkewCmd {
    /// μ⊗h(T_φ^m(A×{ε}) ∩ (A×{ε′})).
    Correlate(SkewCorrelate),
    /// σ̂_f(n) for f = g⊗1 or g⊗χ.
    Spectrum(SkewSpectrum),
    /// Correlations along the times 2^k.
    Rigidity(SkewRigidity),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SkewCorrelate {
    #[command(flatten)]
    pub sys: SkewSystemArgs,
    /// Dyadic interval `num/2^K`.
    #[arg(long, default_value = "0/2^0")]
    pub interval: String,
    #[arg(long, default_value_t = 0)]
    pub eps: u8,
    #[arg(long)]
    pub eps2: Option<u8>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub shifts: Vec<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SkewSpectrum {
    #[command(flatten)]
    pub sys: SkewSystemArgs,
    /// `one`, `sign` (1 on [0,1/2), −1 on [1/2,1)) or `interval:num/2^K`.
    #[arg(long, default_value = "one")]
    pub g: String,
    /// `trivial` (g⊗1) or `character` (g⊗χ).
    #[arg(long, default_value = "character")]
    pub fiber: String,
    /// Coefficients for n = −window..=window.
    #[arg(long, default_value_t = 64)]
    pub window: i64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SkewRigidity {
    #[command(flatten)]
    pub sys: SkewSystemArgs,
    #[arg(long, default_value = "0/2^0")]
    pub interval: String,
    #[arg(long, default_value_t = 0)]
    pub eps: u8,
    /// `a..b` (inclusive) range of k for the times 2^k.
    #[arg(long, default_value = "10..14")]
    pub k: String,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Subcommand, Debug)]
pub enum SpectralCmd {
    /// Cesàro mean of |σ̂(n)|² (discrete mass).
    Wiener(SeqArgs),
    /// Decay of σ̂ over the outer quartile of the window.
    Rajchman(SeqArgs),
    /// σ̂(n_k + j) along a sequence of times.
    Translate(Translate),
    /// Left-tail quasi-analyticity test on weak-limit coefficients.
    Beurling(CoeffArgs),
    /// Singularity certificate from weak-limit coefficients.
    Certify(Certify),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SeqArgs {
    /// CSV with columns n,value,error_bound.
    pub input: PathBuf,
    /// Use at most this many positive indices.
    #[arg(long)]
    pub window: Option<i64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Translate {
    pub input: PathBuf,
    #[arg(long)]
    pub window: Option<i64>,
    /// Comma-separated times n_k.
    #[arg(long, value_delimiter = ',', required = true)]
    pub times: Vec<i64>,
    #[arg(long, default_value_t = 3)]
    pub j_window: i64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoeffArgs {
    /// JSON coefficient file: `{"support": {"i": a_i}, "tail": {"kind": …}}`.
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub n_max: i64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Certify {
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub n_max: i64,
    /// Assert that the limit operator is not itself a power of U.
    #[arg(long)]
    pub non_power: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    command: &'a str,
    config: &'a C,
    result: Value,
}

fn emit<C: Serialize>(command: &str, config: &C, output: &OutputArgs, run: Result<Output, CliError>) -> Result<(), CliError> {
    let Output { result, csv } = run?;
    let report = Report { command, config, result };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize") + "\n";
    if let (Some(path), Some(csv)) = (&output.csv, csv) {
        std::fs::write(path, csv).map_err(|e| CliError::io(path, e))?;
    }
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands::*;
    match cli.group {
        Group::Subst(SubstCmd::Analyze(a)) => emit("subst analyze", &a, &a.output, subst_analyze(&a)),
        Group::Subst(SubstCmd::Correlate(a)) => emit("subst correlate", &a, &a.output, subst_correlate(&a)),
        Group::Rankone(RankOneCmd::Heights(a)) => emit("rankone heights", &a, &a.output, rankone_heights(&a)),
        Group::Rankone(RankOneCmd::Correlate(a)) => emit("rankone correlate", &a, &a.output, rankone_correlate(&a)),
        Group::Rankone(RankOneCmd::Weaklimit(a)) => emit("rankone weaklimit", &a, &a.output, rankone_weaklimit(&a)),
        Group::Rankone(RankOneCmd::Rigidity(a)) => emit("rankone rigidity", &a, &a.output, rankone_rigidity(&a)),
        Group::Skew(SkewCmd::Correlate(a)) => emit("skew correlate", &a, &a.output, skew_correlate(&a)),
        Group::Skew(SkewCmd::Spectrum(a)) => emit("skew spectrum", &a, &a.output, skew_spectrum(&a)),
        Group::Skew(SkewCmd::Rigidity(a)) => emit("skew rigidity", &a, &a.output, skew_rigidity(&a)),
        Group::Spectral(SpectralCmd::Wiener(a)) => emit("spectral wiener", &a, &a.output, spectral_wiener(&a)),
        Group::Spectral(SpectralCmd::Rajchman(a)) => emit("spectral rajchman", &a, &a.output, spectral_rajchman(&a)),
        Group::Spectral(SpectralCmd::Translate(a)) => emit("spectral translate", &a, &a.output, spectral_translate(&a)),
        Group::Spectral(SpectralCmd::Beurling(a)) => emit("spectral beurling", &a, &a.output, spectral_beurling(&a)),
        Group::Spectral(SpectralCmd::Certify(a)) => emit("spectral certify", &a, &a.output, spectral_certify(&a)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e }));
            ExitCode::from(1)
        }
    }
}
