use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "diffract", version, about = "Numerical mathematical diffraction experiments")]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory (default: runs/<command>-<timestamp>-<pid>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Generate a point set: points.csv plus points.json sidecar.
    Generate(GenerateArgs),
    /// Finite-volume autocorrelation of a points file.
    Autocorr(AutocorrArgs),
    /// Intensity scan (amplitude squared or periodogram) of a points file.
    Diffract(DiffractArgs),
    /// Fold a scan into the fundamental domain of a dual lattice.
    Fold(FoldArgs),
    /// Detect Bragg peaks of a points file.
    Peaks(PeaksArgs),
    /// Compare the autocorrelations of two points files.
    Homometry(HomometryArgs),
    /// Bernoulli thinning experiment on a weight-1 points file.
    Thin(ThinArgs),
    /// Spectral scaling exponent of a generator at one wave vector.
    Scaling(ScalingArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Autocorr(_) => "autocorr",
            Command::Diffract(_) => "diffract",
            Command::Fold(_) => "fold",
            Command::Peaks(_) => "peaks",
            Command::Homometry(_) => "homometry",
            Command::Thin(_) => "thin",
            Command::Scaling(_) => "scaling",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorName {
    /// Weight-1 comb on a lattice (--basis, --r).
    Lattice,
    /// Lattice comb decorated with a motif (--basis, --motif, --r).
    Motif,
    /// Cut-and-project Fibonacci model set (--x-lo, --x-max, --window-lo, --window-hi).
    Fibonacci,
    /// Substitution chain (--rule with --iterations, --n or --x-max).
    Substitution,
    /// Rudin-Shapiro ±1 comb on 0..n (--n).
    #[value(alias = "rudin_shapiro")]
    RudinShapiro,
    /// Fair-coin ±1 comb on 0..n (--n, --seed).
    Coin,
    /// Visible points of Z² in the closed disc of radius r (--r).
    Visible,
    /// Bernoulli lattice gas (--basis, --p, --r, --seed).
    Gas,
    /// Bernoulli thinning of an existing points file (--input, --p, --seed).
    Thin,
    /// Complement of a lattice subset within its region (--input).
    Complement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKindArg {
    Box,
    Ball,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub generator: GeneratorName,
    /// Lattice basis, rows separated by ';' and entries by ',' (columns are
    /// the generators), e.g. "2,0;1,1".
    #[arg(long, default_value = "1")]
    pub basis: String,
    /// Region radius: half-width for boxes, radius for balls.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_enum, default_value = "box")]
    pub region_kind: RegionKindArg,
    /// Region centre, comma separated (default: origin).
    #[arg(long)]
    pub center: Option<String>,
    /// Motif atoms "offset:weight" separated by ';', offsets comma separated
    /// Cartesian vectors, e.g. "0:1;0.5:1".
    #[arg(long)]
    pub motif: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x_lo: f64,
    /// Right end of the interval [x_lo, x_max) for fibonacci and substitution.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Window edges; both default to the exact window [−1, τ−1).
    #[arg(long, allow_hyphen_values = true)]
    pub window_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub window_hi: Option<f64>,
    /// fibonacci, thue_morse or period_doubling.
    #[arg(long, default_value = "fibonacci")]
    pub rule: String,
    #[arg(long)]
    pub iterations: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Averaging region override; the points file's own region by default.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RegionArgs {
    #[arg(long)]
    pub region_radius: Option<f64>,
    #[arg(long, value_enum, default_value = "box")]
    pub region_kind: RegionKindArg,
    #[arg(long)]
    pub region_center: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationArg {
    Eq1Literal,
    BoundaryCorrected,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct AutocorrArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = 64.0)]
    pub z_max: f64,
    #[arg(long, value_enum, default_value = "boundary-corrected")]
    pub normalization: NormalizationArg,
    #[command(flatten)]
    pub region: RegionArgs,
}

/// Wave-vector grid: a 1D Cartesian range, or rational dual coordinates of
/// the points' lattice.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub k_hi: f64,
    /// Number of points of the Cartesian grid on [k_lo, k_hi).
    #[arg(long, default_value_t = 1024)]
    pub steps: usize,
    /// Include k_hi as the last grid point.
    #[arg(long)]
    pub inclusive: bool,
    /// Use dual coordinates i/dual_steps over [0, dual_domains)^n instead.
    #[arg(long)]
    pub dual_domains: Option<u32>,
    #[arg(long, default_value_t = 64)]
    pub dual_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    AmplitudeSquared,
    Periodogram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WkArg {
    Exact,
    Truncated,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct DiffractArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, value_enum, default_value = "periodogram")]
    pub estimator: EstimatorArg,
    /// Transform the eq1-literal autocorrelation instead of summing directly.
    #[arg(long, value_enum)]
    pub wiener_khinchin: Option<WkArg>,
    /// Cutoff for --wiener-khinchin (default: 2 × region radius).
    #[arg(long)]
    pub z_max: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FoldArgs {
    /// Scan CSV written by `diffract` (with its JSON sidecar).
    #[arg(long)]
    pub scan: PathBuf,
    /// Bins per axis (default: the scan's dual-grid denominator, else 64).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Lattice whose dual folds the scan (default: the scan's own, else Z^n).
    #[arg(long)]
    pub basis: Option<String>,
    /// Fail (exit 1) when the largest per-bin spread exceeds this.
    #[arg(long)]
    pub max_spread: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PeaksArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Skip golden-section refinement.
    #[arg(long)]
    pub no_refine: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct HomometryArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = 32.0)]
    pub z_max: f64,
    #[arg(long, default_value_t = 0.03)]
    pub tolerance: f64,
    /// Region (default: the region of --a).
    #[command(flatten)]
    pub region: RegionArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ThinArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub p: f64,
    /// Seeds as a list "1,2,3" or a range "1-10".
    #[arg(long, default_value = "1-10")]
    pub seeds: String,
    /// Number of strongest nonzero peaks to track.
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    /// Peaks closer than this to k = 0 are not tracked.
    #[arg(long, default_value_t = 0.05)]
    pub min_peak_k: f64,
    /// Peaks at or above this intensity are kept out of the background window.
    #[arg(long, default_value_t = 1e-3)]
    pub exclude_threshold: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub bg_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub bg_hi: f64,
    #[arg(long, default_value_t = 200)]
    pub bg_samples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub bg_min_dist: f64,
    /// Peak search range [0, peak_k_max].
    #[arg(long, default_value_t = 2.0)]
    pub peak_k_max: f64,
    /// Grid intervals per unit k: default 2·(region length), or for lattice
    /// sets the dual denominator, default the number of cells in the region.
    #[arg(long)]
    pub peak_steps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub ratio_tol: f64,
    #[arg(long, default_value_t = 0.10)]
    pub relative_tol: f64,
    #[arg(long, default_value_t = 0.20)]
    pub background_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceName {
    Lattice,
    Fibonacci,
    #[value(alias = "thue_morse")]
    ThueMorse,
    #[value(alias = "period_doubling")]
    PeriodDoubling,
    #[value(alias = "rudin_shapiro")]
    RudinShapiro,
    Coin,
    #[value(alias = "model_set")]
    ModelSet,
    Gas,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ScalingArgs {
    #[arg(value_enum)]
    pub generator: SequenceName,
    #[arg(long, allow_hyphen_values = true)]
    pub k: f64,
    /// Explicit sizes "1024,2048,..." (overrides the exponent range).
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub min_exp: u32,
    #[arg(long, default_value_t = 18)]
    pub max_exp: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Fail (exit 1) unless the fitted label equals this.
    #[arg(long)]
    pub expect_label: Option<String>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}
