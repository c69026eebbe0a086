//! Late-time fits of solutions to `H(t) ≈ A e^{λt} t^p`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::volterra::{solve_two_time, StationarySolution};

/// Fewest grid points a fit window may hold.
pub const MIN_FIT_POINTS: usize = 50;

const JACKKNIFE_BLOCKS: usize = 4;

/// Jackknife standard deviations of the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitSpread {
    pub lambda: f64,
    pub p: f64,
    pub ln_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticsFit {
    pub window: (f64, f64),
    pub points: usize,
    pub lambda_hat: f64,
    pub p_hat: f64,
    #[serde(rename = "lnA_hat")]
    pub ln_a_hat: f64,
    pub rms: f64,
    pub spread: FitSpread,
}

impl AsymptoticsFit {
    /// Model value of `ln H(t)`.
    pub fn log_model(&self, t: f64) -> f64 {
        self.ln_a_hat + self.lambda_hat * t + self.p_hat * t.ln()
    }
}

/// `[T/2, T]` for the solution's last grid time `T`.
pub fn default_window(solution: &StationarySolution) -> (f64, f64) {
    let end = solution.end_time();
    (0.5 * end, end)
}

fn window_points(times: &[f64], logs: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = window;
    let last = times.last().copied().unwrap_or(0.0);
    if !(lo > 0.0 && hi > lo && hi <= last * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "fit window [{lo}, {hi}] must lie inside (0, {last}]"
        )));
    }
    let slack = 1e-9 * hi;
    let (ts, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(logs)
        .filter(|(t, _)| **t >= lo - slack && **t <= hi + slack)
        .map(|(t, y)| (*t, *y))
        .unzip();
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Domain(format!(
            "fit window [{lo}, {hi}] holds {} grid points, need at least {MIN_FIT_POINTS}",
            ts.len()
        )));
    }
    Ok((ts, ys))
}

/// Least squares on `{1, t, ln t}`, returning `(ln A, λ, p)`.
fn least_squares(ts: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    let (lo, hi) = (ts[0], ts[ts.len() - 1]);
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let design = DMatrix::from_fn(ts.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => (ts[r] - centre) / half,
        _ => (ts[r] / centre).ln(),
    });
    let rhs = DVector::from_column_slice(ys);
    let qr = design.qr();
    let projected = qr.q().transpose() * rhs;
    let coef = qr
        .r()
        .solve_upper_triangular(&projected)
        .ok_or_else(|| Error::Internal("singular least-squares system".into()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let lambda = b / half;
    Ok([a - lambda * centre - c * centre.ln(), lambda, c])
}

/// Fits `ln H = ln A + λt + p ln t` to the points of `times`/`logs` inside `window`.
pub fn fit_log_series(times: &[f64], logs: &[f64], window: (f64, f64)) -> Result<AsymptoticsFit> {
    let (ts, ys) = window_points(times, logs, window)?;
    let [ln_a, lambda, p] = least_squares(&ts, &ys)?;
    let rms = (ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| {
            let r = y - (ln_a + lambda * t + p * t.ln());
            r * r
        })
        .sum::<f64>()
        / ts.len() as f64)
        .sqrt();

    let n = ts.len();
    let mut estimates = Vec::with_capacity(JACKKNIFE_BLOCKS);
    for b in 0..JACKKNIFE_BLOCKS {
        let (start, end) = (b * n / JACKKNIFE_BLOCKS, (b + 1) * n / JACKKNIFE_BLOCKS);
        let keep_t: Vec<f64> = ts[..start].iter().chain(&ts[end..]).copied().collect();
        let keep_y: Vec<f64> = ys[..start].iter().chain(&ys[end..]).copied().collect();
        estimates.push(least_squares(&keep_t, &keep_y)?);
    }
    let k = JACKKNIFE_BLOCKS as f64;
    let spread_of = |idx: usize| {
        let mean = estimates.iter().map(|e| e[idx]).sum::<f64>() / k;
        ((k - 1.0) / k
            * estimates
                .iter()
                .map(|e| (e[idx] - mean).powi(2))
                .sum::<f64>())
        .sqrt()
    };
    Ok(AsymptoticsFit {
        window,
        points: n,
        lambda_hat: lambda,
        p_hat: p,
        ln_a_hat: ln_a,
        rms,
        spread: FitSpread {
            lambda: spread_of(1),
            p: spread_of(2),
            ln_a: spread_of(0),
        },
    })
}

fn detilted(solution: &StationarySolution) -> (Vec<f64>, Vec<f64>) {
    let times = (0..solution.len()).map(|i| solution.time(i)).collect();
    let logs = (0..solution.len()).map(|i| solution.log_h(i)).collect();
    (times, logs)
}

/// Fits `A e^{λt} t^p` to a stationary solution over `window`.
pub fn fit_exponential_power(
    solution: &StationarySolution,
    window: (f64, f64),
) -> Result<AsymptoticsFit> {
    let (times, logs) = detilted(solution);
    fit_log_series(&times, &logs, window)
}

/// Median of pairwise slopes `(y_{i+m} - y_i)/(t_{i+m} - t_i)` with `m` half the point count.
fn paired_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let half = ts.len() / 2;
    let mut slopes: Vec<f64> = (0..ts.len() - half)
        .map(|i| (ys[i + half] - ys[i]) / (ts[i + half] - ts[i]))
        .collect();
    slopes.sort_by(f64::total_cmp);
    let m = slopes.len();
    if m % 2 == 1 {
        slopes[m / 2]
    } else {
        0.5 * (slopes[m / 2 - 1] + slopes[m / 2])
    }
}

/// Robust growth rate of `ln H` over `window`, ignoring any power-law factor.
pub fn fit_lyapunov_only(solution: &StationarySolution, window: (f64, f64)) -> Result<f64> {
    let (times, logs) = detilted(solution);
    let (ts, ys) = window_points(&times, &logs, window)?;
    Ok(paired_slope(&ts, &ys))
}

/// One row of [`flat_kernel_limit_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatRow {
    pub t: f64,
    /// Fitted growth rate of `H(t + x, t)` in `x` over the upper half of the gap.
    pub slope: f64,
    pub p_hat: f64,
}

/// For each base time `t`, solves the two-time equation on `[t, t + gap]`
/// and fits the growth rate of `x ↦ H(t + x, t)` over `x ∈ [gap/2, gap]`.
///
/// The rate is the `λ` of the `{1, x, ln x}` fit; a bare line fit would
/// carry the slope bias of a `x^{-3/2}` prefactor.
pub fn flat_kernel_limit_check(
    kernel: &KernelSpec,
    t_values: &[f64],
    gap: f64,
    step: f64,
) -> Result<Vec<FlatRow>> {
    if t_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "base times must be strictly increasing".into(),
        ));
    }
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("gap must be > 0, got {gap}")));
    }
    let tilt = kernel.default_tilt();
    t_values
        .par_iter()
        .map(|&t| {
            let sol = solve_two_time(kernel, t, t + gap, step, tilt)?;
            let lags: Vec<f64> = (0..sol.len()).map(|j| j as f64 * step).collect();
            let logs = sol.base_column_log();
            let fit = fit_log_series(&lags, &logs, (0.5 * gap, lags[lags.len() - 1]))?;
            Ok(FlatRow {
                t,
                slope: fit.lambda_hat,
                p_hat: fit.p_hat,
            })
        })
        .collect()
}
