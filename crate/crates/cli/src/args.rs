use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "weyl-lab", version, about = "Weyl sums: evaluation, vanishing certificates, small values and Cantor measures")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Destination of the table (default: stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Sidecar path (default: the output with a `.json` extension, or
    /// stderr when writing to stdout).
    #[arg(long, global = true)]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Worker threads (default: WEYL_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Incremental,
    Direct,
    /// Residue histogram; rational points only.
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate S_d(x; N), optionally tracing partial sums.
    Eval(EvalArgs),
    /// Certify that a complete sum at a rational point vanishes.
    Certify(CertifyArgs),
    /// Enumerate or sample a vanishing family.
    Family(FamilyArgs),
    /// Build a nested-interval point of a Diophantine family.
    Dio(DioArgs),
    /// Estimate the radius of a small-sum neighbourhood of a family.
    Delta(DeltaArgs),
    /// Scan incomplete sums against their bound shapes.
    Bounds(BoundsArgs),
    /// Compare perturbed and anchor partial sums.
    Continuity(ContinuityArgs),
    /// Smallest |S(x; N)| up to a horizon.
    Liminf(LiminfArgs),
    /// Search a region for a small partial sum.
    Search(SearchArgs),
    /// Orbit statistics of the partial sums.
    Orbit(OrbitArgs),
    /// Count N with |S(x; N)| >= N^alpha along a curve of points.
    Restricted(RestrictedArgs),
    /// Growth band of |S_2| / sqrt(N).
    Band(BandArgs),
    /// Tail distribution of N^{-1/2} |G(x; N)| over a grid.
    Psi(PsiArgs),
    /// Continued fraction expansion of a real.
    Cf(CfArgs),
    /// Box-counting dimension of a CSV point cloud.
    Boxdim(BoxdimArgs),
    /// Random Cantor set experiments.
    #[command(subcommand)]
    Cantor(CantorCommand),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Certify(_) => "certify",
            Command::Family(_) => "family",
            Command::Dio(_) => "dio",
            Command::Delta(_) => "delta",
            Command::Bounds(_) => "bounds",
            Command::Continuity(_) => "continuity",
            Command::Liminf(_) => "liminf",
            Command::Search(_) => "search",
            Command::Orbit(_) => "orbit",
            Command::Restricted(_) => "restricted",
            Command::Band(_) => "band",
            Command::Psi(_) => "psi",
            Command::Cf(_) => "cf",
            Command::Boxdim(_) => "boxdim",
            Command::Cantor(c) => match c {
                CantorCommand::Sample(_) => "cantor sample",
                CantorCommand::Measure(_) => "cantor measure",
                CantorCommand::Expectation(_) => "cantor expectation",
                CantorCommand::Draw(_) => "cantor draw",
                CantorCommand::WeylStat(_) => "cantor weyl-stat",
            },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Coefficients `x1,...,xd` as reals, or `a1,...,ad/m` for a rational point.
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = Kernel::Incremental)]
    pub kernel: Kernel,
    /// Emit S(N) at every multiple of the stride instead of only at N.
    #[arg(long)]
    pub stride: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    /// Rational point `a1,...,ad/m`.
    #[arg(long)]
    pub point: String,
    /// Number of terms (default: the modulus).
    #[arg(long)]
    pub span: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FamilyArgs {
    /// P_p, Q_p, R_p or lambda-binomial.
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Draw this many random members instead of enumerating.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DioArgs {
    /// P*, Q*, R* or rectangle.
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// gauss-p, shifted-gauss-p, monomial-p or quadratic-4p.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub p_max: u64,
    /// Degree for monomial-p.
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    #[arg(long, default_value_t = 2000)]
    pub exhaustive_limit: usize,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// K = sqrt(p), top coordinate only.
    Gauss,
    /// K = sqrt(p) log p.
    Quadratic4p,
    /// kappa N^alpha + K from --alpha, --kappa, --k.
    Custom,
}

#[derive(Debug, Args, Serialize)]
pub struct ContinuityArgs {
    /// Rational anchor `a1,...,ad/m`.
    #[arg(long)]
    pub anchor: String,
    #[arg(long, value_enum, default_value_t = ProfileKind::Gauss)]
    pub profile: ProfileKind,
    /// Prime for the gauss and quadratic-4p profiles.
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long)]
    pub n: u64,
    /// Comma-separated perturbation sizes.
    #[arg(long, default_value = "0.1,0.5,1")]
    pub tau: String,
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LiminfArgs {
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub n_max: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// One `lo..hi` range per coordinate, comma-separated.
    #[arg(long)]
    pub region: String,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n_cap: u64,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitArgs {
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub n_max: u64,
    /// Half-width of the occupancy window [-W, W)^2.
    #[arg(long, default_value_t = 64.0)]
    pub window: f64,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RestrictedArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Points (t, t^2) on the parabola.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub n_min: u64,
    #[arg(long)]
    pub n_max: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BandArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[arg(long)]
    pub n_max: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PsiArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CfArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BoxdimArgs {
    /// CSV file with a header row; every selected column is a coordinate in [0, 1].
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated column names (default: all columns).
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub k_min: u32,
    #[arg(long, default_value_t = 10)]
    pub k_max: u32,
}

/// A realization read from a file or expanded from a seed.
#[derive(Debug, Args, Serialize)]
pub struct RealizationArgs {
    /// Realization file written by `cantor sample`.
    #[arg(long, conflicts_with_all = ["depth", "seed"])]
    pub realization: Option<PathBuf>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum CantorCommand {
    /// Expand a realization and write its text form.
    Sample(CantorSampleArgs),
    /// mu_n of a rectangle.
    Measure(CantorMeasureArgs),
    /// Monte Carlo mean of mu_n(rect) over realizations.
    Expectation(CantorExpectationArgs),
    /// Draw points from the natural measure.
    Draw(CantorDrawArgs),
    /// Distribution of max |S_2(x; N)| / (sqrt(N) g(log N)) over Cantor points.
    WeylStat(CantorWeylStatArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CantorSampleArgs {
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CantorMeasureArgs {
    #[command(flatten)]
    pub source: RealizationArgs,
    /// `x0,y0,x1,y1`.
    #[arg(long)]
    pub rect: String,
    /// Also compute the measure in exact rational arithmetic.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CantorExpectationArgs {
    #[arg(long)]
    pub rect: String,
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CantorDrawArgs {
    #[command(flatten)]
    pub source: RealizationArgs,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub draw_seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct CantorWeylStatArgs {
    #[arg(long)]
    pub depth: u32,
    #[arg(long, default_value_t = 10)]
    pub realizations: usize,
    #[arg(long, default_value_t = 10)]
    pub per_realization: usize,
    #[arg(long)]
    pub n_max: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra points `x,y`, separated by `;`.
    #[arg(long)]
    pub force: Option<String>,
}
