use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magnifier_walk::rw::RwParams;
use magnifier_walk::verify::Tolerances;

/// Smallest accepted k-grid and quadrature size.
pub const MIN_GRID: u64 = 16;

#[derive(Debug, Parser)]
#[command(name = "magnifier", version, about = "Szegedy walks on the magnifier graph")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form spectral data and a k-grid table of spec(J_k) and arg spec(U_k).
    Spectrum(SpectrumArgs),
    /// Position distribution of the mixed ensemble after `--steps` steps.
    Simulate(SimulateArgs),
    /// Analytic localization profiles against the time-averaged simulation.
    Localization(LocalizationArgs),
    /// The weak-limit density, its branch decomposition and the KS distance.
    Limit(LimitArgs),
    /// Runs every invariant suite and prints a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Probability S -> T along the upper edge.
    #[arg(long, value_parser = open_unit)]
    pub p: f64,
    /// Probability T -> S along the upper edge.
    #[arg(long, value_parser = open_unit)]
    pub q: f64,
    /// Probability S -> R.
    #[arg(long, value_parser = open_unit)]
    pub r: f64,
    /// Number of walk steps.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Window radius in cells; defaults to the light cone of `--steps`.
    #[arg(long)]
    pub window: Option<u64>,
    /// Number of wave numbers on [0, 2π).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(MIN_GRID..))]
    pub kgrid: u64,
    /// Gauss–Legendre nodes for limit-law integrals.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(MIN_GRID..))]
    pub quad: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tol: TolArgs,
}

impl RunConfig {
    pub fn params(&self) -> RwParams {
        RwParams::new(self.p, self.q, self.r).expect("validated at parse time")
    }
}

#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    #[arg(long = "tol-unitarity", default_value_t = 1e-9)]
    pub unitarity: f64,
    #[arg(long = "tol-spectral", default_value_t = 1e-10)]
    pub spectral: f64,
    #[arg(long = "tol-round-trip", default_value_t = 1e-12)]
    pub round_trip: f64,
    #[arg(long = "tol-derivative", default_value_t = 1e-6)]
    pub derivative: f64,
    #[arg(long = "tol-mass", default_value_t = 1e-6)]
    pub mass: f64,
    #[arg(long = "tol-pushforward", default_value_t = 1e-3)]
    pub pushforward: f64,
    #[arg(long = "tol-moment", default_value_t = 1e-8)]
    pub moment: f64,
    #[arg(long = "tol-equivalence", default_value_t = 1e-10)]
    pub equivalence: f64,
    #[arg(long = "tol-weights", default_value_t = 1e-8)]
    pub weights: f64,
}

impl From<&TolArgs> for Tolerances {
    fn from(t: &TolArgs) -> Self {
        Self {
            unitarity: t.unitarity,
            spectral: t.spectral,
            round_trip: t.round_trip,
            derivative: t.derivative,
            mass: t.mass,
            pushforward: t.pushforward,
            moment: t.moment,
            equivalence: t.equivalence,
            weights: t.weights,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Also emit μ_t at this step (repeatable).
    #[arg(long = "checkpoint")]
    pub checkpoints: Vec<usize>,
    /// Mass allowed outside the reported pseudo velocity.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LocalizationArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Cells |j| ≤ radius are reported.
    #[arg(long, default_value_t = 20)]
    pub radius: u64,
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Interior abscissae on (-κ, κ).
    #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(MIN_GRID..))]
    pub points: u64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Negative control: run the operator suites with a non-unitary coin.
    #[arg(long, hide = true)]
    pub corrupt_coin: bool,
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("not a number: {e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} violates 0 < value < 1"))
    }
}
