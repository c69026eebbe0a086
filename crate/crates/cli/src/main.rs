mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use kraichnan::asymptotics::{
    default_window, fit_exponential_power, fit_lyapunov_only, flat_kernel_limit_check,
};
use kraichnan::matrix_oracle::{evolve_trace, EnsembleConfig};
use kraichnan::ncp::{series_partial_sum, Quadrature};
use kraichnan::spectral::{
    exact_exponential_transform, lambda_c_algebraic, lambda_c_exponential, lambda_c_mixed,
    lambda_c_vanishing, SpectralMethod, SpectralReport, Transform,
};
use kraichnan::validate::run_all;
use kraichnan::volterra::{solve_stationary, solve_two_time};
use kraichnan::{Error, KernelSpec, StationarySolution, ARTIFACT_VERSION};
use serde::Serialize;
use serde_json::json;

use args::{Cli, Command, KernelArg, LambdacMethod};

const THREADS_ENV: &str = "KRAICHNAN_THREADS";

enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Outcome<()> {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Error::Usage(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = count {
        if n == 0 {
            return Err(Error::Usage("thread count must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

/// Parses the kernel and rewrites the argument to its canonical JSON so the
/// artifact is self-contained even when the kernel came from a file.
fn resolve_kernel(arg: &mut KernelArg) -> Outcome<KernelSpec> {
    let text = match arg.kernel.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read kernel file {path}: {e}")))?,
        None => arg.kernel.clone(),
    };
    let kernel = KernelSpec::from_json(&text)?;
    arg.kernel = kernel.to_json();
    Ok(kernel)
}

#[derive(Serialize)]
struct RunConfig<'a> {
    artifact_version: &'static str,
    #[serde(flatten)]
    command: &'a Command,
    out: Option<String>,
}

struct Sink {
    config: String,
    target: Box<dyn Write>,
}

impl Sink {
    fn open(cli: &Cli, command: &Command) -> Outcome<Self> {
        let config = serde_json::to_string(&RunConfig {
            artifact_version: ARTIFACT_VERSION,
            command,
            out: cli.out.as_ref().map(|p| p.display().to_string()),
        })
        .map_err(|e| Error::Internal(e.to_string()))?;
        let target: Box<dyn Write> = match &cli.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Sink { config, target })
    }

    fn csv(mut self, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome<()> {
        writeln!(self.target, "# run_config={}", self.config)?;
        body(&mut self.target)?;
        self.target.flush()?;
        Ok(())
    }

    fn json(mut self, result: impl Serialize) -> Outcome<()> {
        let config: serde_json::Value =
            serde_json::from_str(&self.config).expect("config is valid JSON");
        let doc = json!({ "run_config": config, "result": result });
        let text =
            serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(self.target, "{text}")?;
        self.target.flush()?;
        Ok(())
    }
}

fn stationary(kernel: &KernelSpec, horizon: f64, step: f64) -> Outcome<StationarySolution> {
    Ok(solve_stationary(
        kernel,
        horizon,
        step,
        kernel.default_tilt(),
    )?)
}

fn run(mut cli: Cli) -> Outcome<ExitCode> {
    configure_threads(cli.threads)?;
    let mut command = cli.command.clone();
    let kernel = match &mut command {
        Command::Solve(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Solve2d(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Series(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Lambdac(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Laplace(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Fit(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Flatcheck(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Mc(a) => Some(resolve_kernel(&mut a.kernel)?),
        Command::Validate => None,
    };
    let weight = match &mut command {
        Command::Laplace(a) => match a.weight.take() {
            Some(text) => {
                let mut arg = KernelArg { kernel: text };
                let w = resolve_kernel(&mut arg)?;
                a.weight = Some(arg.kernel);
                Some(w)
            }
            None => None,
        },
        _ => None,
    };
    cli.command = command.clone();

    // every precondition is checked before the artifact is opened
    let kernel = kernel.unwrap_or(KernelSpec::Constant { c: 0.0 });
    match &command {
        Command::Solve(a) => {
            let tilt = a.tilt.unwrap_or_else(|| kernel.default_tilt());
            let sol = solve_stationary(&kernel, a.horizon, a.step, tilt)?;
            Sink::open(&cli, &command)?.csv(|mut w| sol.write_csv(&mut w))?;
        }
        Command::Solve2d(a) => {
            let tilt = a.tilt.unwrap_or_else(|| kernel.default_tilt());
            let sol = solve_two_time(&kernel, a.t0, a.horizon, a.step, tilt)?;
            Sink::open(&cli, &command)?.csv(|mut w| sol.write_csv(&mut w))?;
        }
        Command::Series(a) => {
            if a.n_max >= 3 && a.seed.is_none() {
                return Err(Error::Usage(
                    "--seed is required when --n-max >= 3 (Monte Carlo terms)".into(),
                )
                .into());
            }
            let quad = Quadrature {
                grid: a.grid,
                samples: a.samples,
                seed: a.seed.unwrap_or(0),
            };
            let approx = series_partial_sum(&kernel, a.t, a.s, a.n_max, &quad)?;
            Sink::open(&cli, &command)?.json(approx)?;
        }
        Command::Lambdac(a) => {
            let report = lambdac(&kernel, a.method, a.horizon, a.step)?;
            Sink::open(&cli, &command)?.json(report)?;
        }
        Command::Laplace(a) => {
            let sol = stationary(&kernel, a.horizon, a.step)?;
            let transform = Transform::new(&sol)?;
            let values = a
                .lambdas
                .iter()
                .map(|&l| transform.laplace(l, weight.as_ref()))
                .collect::<kraichnan::Result<Vec<_>>>()?;
            let exact = match (&kernel, &weight) {
                (KernelSpec::Exponential { c, delta }, None) => Some(
                    a.lambdas
                        .iter()
                        .map(|&l| exact_exponential_transform(*c, *delta, l))
                        .collect::<kraichnan::Result<Vec<_>>>()?,
                ),
                _ => None,
            };
            Sink::open(&cli, &command)?.json(json!({
                "lambdas": a.lambdas,
                "values": values,
                "exact": exact,
                "tail": transform.tail(),
            }))?;
        }
        Command::Fit(a) => {
            let window = match a.window.as_deref() {
                Some(&[start, end]) => Some((start, end)),
                Some(w) => {
                    return Err(Error::Usage(format!(
                        "--window takes start,end; got {} values",
                        w.len()
                    ))
                    .into())
                }
                None => None,
            };
            let sol = stationary(&kernel, a.horizon, a.step)?;
            let window = window.unwrap_or_else(|| default_window(&sol));
            let fit = fit_exponential_power(&sol, window)?;
            let lyapunov = fit_lyapunov_only(&sol, window)?;
            Sink::open(&cli, &command)?.json(json!({ "fit": fit, "lyapunov_only": lyapunov }))?;
        }
        Command::Flatcheck(a) => {
            let rows = flat_kernel_limit_check(&kernel, &a.t_values, a.gap, a.step)?;
            let limit = kernel.flat_limit().map(|k| 2.0 * k.diagonal_sup().sqrt());
            Sink::open(&cli, &command)?.json(json!({ "rows": rows, "limit_rate": limit }))?;
        }
        Command::Mc(a) => {
            let config = EnsembleConfig {
                n: a.n,
                samples: a.samples,
                t0: a.t0,
                horizon: a.horizon,
                step: a.step,
                kernel: kernel.clone(),
                seed: a.seed,
            };
            let estimate = evolve_trace(&config)?;
            Sink::open(&cli, &command)?.csv(|mut w| estimate.write_csv(&mut w))?;
        }
        Command::Validate => {
            let results = run_all();
            let passed = results.iter().all(|r| r.passed);
            for r in &results {
                eprintln!(
                    "{} {}::{} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.module,
                    r.name,
                    r.detail
                );
            }
            Sink::open(&cli, &command)?.json(json!({ "passed": passed, "checks": results }))?;
            return Ok(ExitCode::from(if passed { 0 } else { 3 }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn lambdac(
    kernel: &KernelSpec,
    method: LambdacMethod,
    horizon: f64,
    step: f64,
) -> Outcome<SpectralReport> {
    use LambdacMethod::*;
    let report = match (kernel, method) {
        (KernelSpec::Exponential { c, delta }, Auto | Bessel) => lambda_c_exponential(*c, *delta)?,
        (KernelSpec::Exponential { .. } | KernelSpec::PowerLaw { .. }, Auto | Vanishing) => {
            lambda_c_vanishing(kernel, &stationary(kernel, horizon, step)?)?
        }
        (KernelSpec::MixedExponential { c2, c1, delta }, Auto) => {
            lambda_c_mixed(*c2, *c1, *delta, &stationary(kernel, horizon, step)?)?
        }
        (KernelSpec::AlgebraicMixed { c2, c1, a }, Auto) => {
            lambda_c_algebraic(*c2, *c1, *a, &stationary(kernel, horizon, step)?)?
        }
        // the c1 = 0 member of the mixed family, known in closed form
        (KernelSpec::Constant { c }, Auto) => SpectralReport {
            kernel: kernel.clone(),
            lambda_c: 2.0 * c.sqrt(),
            method: SpectralMethod::MixedSqrt,
            z: None,
            nu_c: None,
            derivative: None,
            limit_candidates: None,
            residual: 0.0,
        },
        (KernelSpec::Separable { .. } | KernelSpec::RatioFlat { .. }, _) => {
            return Err(Error::Usage("lambdac needs a stationary kernel".into()).into())
        }
        (_, m) => {
            return Err(Error::Usage(format!(
                "method {m:?} does not apply to {}",
                kernel.to_json()
            ))
            .into())
        }
    };
    Ok(report)
}
