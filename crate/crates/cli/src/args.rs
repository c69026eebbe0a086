use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "kraichnan",
    version,
    about = "Solve and cross-check the Kraichnan equation"
)]
pub struct Cli {
    /// Worker threads (default: $KRAICHNAN_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Artifact path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Stationary solution H(t) as CSV.
    Solve(SolveArgs),
    /// Two-time solution H(s,t) for t0 <= t <= s <= T as CSV.
    Solve2d(Solve2dArgs),
    /// Truncated non-crossing pairing series as JSON.
    Series(SeriesArgs),
    /// Lyapunov exponent report as JSON.
    Lambdac(LambdacArgs),
    /// Laplace transform of the stationary solution on a grid of rates, as JSON.
    Laplace(LaplaceArgs),
    /// Fit of A e^{λt} t^p to the stationary solution, as JSON.
    Fit(FitArgs),
    /// Slopes of two-time solutions at growing base times, as JSON.
    Flatcheck(FlatcheckArgs),
    /// Random-matrix Monte Carlo estimate of the normalized trace, as CSV.
    Mc(McArgs),
    /// Run the built-in invariant checks.
    Validate,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArg {
    /// Kernel JSON, or @path to a file holding it.
    #[arg(long)]
    #[serde(serialize_with = "embed_json")]
    pub kernel: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true)]
    #[serde(rename = "h")]
    pub step: f64,
    /// Tilt rate; defaults to 2 sqrt(sup k).
    #[arg(long = "mu", allow_negative_numbers = true)]
    #[serde(rename = "mu")]
    pub tilt: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Solve2dArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true)]
    #[serde(rename = "h")]
    pub step: f64,
    #[arg(long = "mu", allow_negative_numbers = true)]
    #[serde(rename = "mu")]
    pub tilt: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeriesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    /// Earlier time.
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Later time.
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    #[arg(long, default_value_t = 200_000)]
    pub samples: u64,
    /// Required once Monte Carlo terms (order 3 and above) are requested.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdacMethod {
    /// Pick by kernel family.
    Auto,
    /// Bessel-zero condition (exponential kernels only).
    Bessel,
    /// Fixed point of λ = (Hk)^(λ) (power-law and exponential kernels).
    Vanishing,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LambdacArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long, value_enum, default_value_t = LambdacMethod::Auto)]
    pub method: LambdacMethod,
    /// Horizon of the numerical solution used by transform-based solvers.
    #[arg(long = "T", allow_negative_numbers = true, default_value_t = 40.0)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true, default_value_t = 0.01)]
    #[serde(rename = "h")]
    pub step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LaplaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long = "T", allow_negative_numbers = true, default_value_t = 40.0)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true, default_value_t = 0.01)]
    #[serde(rename = "h")]
    pub step: f64,
    /// Comma-separated rates.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub lambdas: Vec<f64>,
    /// Stationary weight kernel k, giving (Hk)^ instead of Ĥ.
    #[arg(long)]
    #[serde(serialize_with = "embed_optional_json")]
    pub weight: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true, default_value_t = 0.01)]
    #[serde(rename = "h")]
    pub step: f64,
    /// Fit window as `start,end`; defaults to [T/2, T].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlatcheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    /// Comma-separated base times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t_values: Vec<f64>,
    #[arg(long)]
    pub gap: f64,
    #[arg(long = "h", allow_negative_numbers = true, default_value_t = 0.02)]
    #[serde(rename = "h")]
    pub step: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub kernel: KernelArg,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long = "S", alias = "samples")]
    #[serde(rename = "S")]
    pub samples: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long = "T", allow_negative_numbers = true)]
    #[serde(rename = "T")]
    pub horizon: f64,
    #[arg(long = "h", allow_negative_numbers = true, default_value_t = 0.1)]
    #[serde(rename = "h")]
    pub step: f64,
    #[arg(long)]
    pub seed: u64,
}

/// Writes a JSON string argument as the JSON value it holds.
fn embed_json<S: serde::Serializer>(text: &str, ser: S) -> Result<S::Ok, S::Error> {
    match serde_json::from_str::<serde_json::Value>(text) {
        Ok(v) => v.serialize(ser),
        Err(_) => ser.serialize_str(text),
    }
}

fn embed_optional_json<S: serde::Serializer>(
    text: &Option<String>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    match text {
        Some(t) => embed_json(t, ser),
        None => ser.serialize_none(),
    }
}
