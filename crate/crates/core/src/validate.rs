//! Quick invariant checks over every module, used by `kraichnan validate`.

use serde::Serialize;

use crate::asymptotics::fit_exponential_power;
use crate::bessel::{bessel_ratio, gamma, semicircle_mgf, smallest_zero};
use crate::error::Result;
use crate::kernels::{KernelSpec, Tabulated};
use crate::matrix_oracle::{evolve_trace, EnsembleConfig};
use crate::ncp::{catalan, enumerate_ncp, wick_moment};
use crate::spectral::{exact_exponential_transform, lambda_c_exponential, laplace_of};
use crate::volterra::{check_upper_bound, solve_stationary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("kernels", "json_roundtrip", kernels_roundtrip),
    ("volterra", "constant_kernel_semicircle", volterra_constant),
    ("volterra", "tilt_invariance", volterra_tilt),
    (
        "volterra",
        "kernel_monotonicity_and_bound",
        volterra_monotone,
    ),
    ("ncp", "enumeration_counts", ncp_counts),
    ("ncp", "constant_kernel_moments", ncp_moments),
    ("bessel", "zero_and_gamma_values", bessel_values),
    ("bessel", "ratio_recurrence", bessel_recurrence),
    (
        "spectral",
        "exponential_transform_identity",
        spectral_identity,
    ),
    ("spectral", "constant_kernel_transform", spectral_constant),
    ("asymptotics", "power_law_exponent", asymptotics_exponent),
    (
        "matrix_oracle",
        "zero_kernel_and_determinism",
        matrix_determinism,
    ),
];

/// Runs every check; a check that errors counts as failed.
pub fn run_all() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(module, name, check)| {
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, e.to_string()),
            };
            CheckResult {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn kernels_roundtrip() -> Result<(bool, String)> {
    let kernels = [
        KernelSpec::Constant { c: 1.0 },
        KernelSpec::Exponential { c: 1.0, delta: 0.5 },
        KernelSpec::MixedExponential {
            c2: 1.0,
            c1: 1.0,
            delta: 1.0,
        },
        KernelSpec::PowerLaw { c: 1.0, a: 2.0 },
        KernelSpec::AlgebraicMixed {
            c2: 1.0,
            c1: 1.0,
            a: 2.0,
        },
        KernelSpec::Separable {
            h: Tabulated::sample(0.1, 11, |u| u)?,
        },
        KernelSpec::RatioFlat {
            c: 1.0,
            a: 1.0,
            stationary_part: None,
        },
    ];
    let mut bad = Vec::new();
    for k in &kernels {
        if &KernelSpec::from_json(&k.to_json())? != k {
            bad.push(k.to_json());
        }
    }
    Ok((
        bad.is_empty(),
        format!("{} families, mismatches: {bad:?}", kernels.len()),
    ))
}

fn volterra_constant() -> Result<(bool, String)> {
    let k = KernelSpec::Constant { c: 1.0 };
    let sol = solve_stationary(&k, 2.0, 1e-3, k.default_tilt())?;
    let worst = (0..sol.len())
        .map(|i| (sol.h_value(i) / semicircle_mgf(sol.time(i)) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-4, format!("max relative error {worst:.2e}")))
}

fn volterra_tilt() -> Result<(bool, String)> {
    let k = KernelSpec::Exponential { c: 1.0, delta: 1.0 };
    let a = solve_stationary(&k, 5.0, 0.01, 0.0)?;
    let b = solve_stationary(&k, 5.0, 0.01, 2.0)?;
    let worst = (0..a.len())
        .map(|i| (a.log_h(i) - b.log_h(i)).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-10, format!("max |Δ ln H| {worst:.2e}")))
}

fn volterra_monotone() -> Result<(bool, String)> {
    let small = KernelSpec::Exponential { c: 1.0, delta: 1.0 };
    let large = KernelSpec::Constant { c: 1.0 };
    let a = solve_stationary(&small, 10.0, 0.01, 2.0)?;
    let b = solve_stationary(&large, 10.0, 0.01, 2.0)?;
    let ordered = (0..a.len()).all(|i| a.values[i] <= b.values[i] * (1.0 + 1e-9));
    let bound = check_upper_bound(&b);
    Ok((
        ordered && bound <= 1e-3,
        format!("ordered={ordered}, bound excess {bound:.2e}"),
    ))
}

fn ncp_counts() -> Result<(bool, String)> {
    let mut ok = true;
    for n in 0..=6 {
        let pairings = enumerate_ncp(n)?;
        ok &= pairings.len() as u64 == catalan(n as u64)?;
        ok &= pairings
            .iter()
            .all(|p| p.is_involution() && p.is_non_crossing());
    }
    Ok((ok, "orders 0..=6".into()))
}

fn ncp_moments() -> Result<(bool, String)> {
    let k = KernelSpec::Constant { c: 1.0 };
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let times: Vec<f64> = (0..2 * n).map(|i| i as f64 * 0.1).collect();
        let m = wick_moment(&times, &k)?;
        worst = worst.max((m - catalan(n as u64)? as f64).abs());
    }
    Ok((
        worst == 0.0,
        format!("max deviation from Catalan numbers {worst}"),
    ))
}

fn bessel_values() -> Result<(bool, String)> {
    let j0 = smallest_zero(0.0)?;
    let g = gamma(5.0);
    let ok = (j0 - 2.404_825_557_695_773).abs() < 1e-10 && (g - 24.0).abs() < 1e-12;
    Ok((ok, format!("j_0 = {j0}, Γ(5) = {g}")))
}

fn bessel_recurrence() -> Result<(bool, String)> {
    let z = 2.0;
    let mut worst = 0.0f64;
    for nu in [0.5, 1.0, 2.5, 7.0] {
        let lhs = bessel_ratio(nu, z)?;
        let rhs = 1.0 / (2.0 * nu / z - bessel_ratio(nu + 1.0, z)?);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok((worst < 1e-12, format!("max residual {worst:.2e}")))
}

fn spectral_identity() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for l in [1.0, 2.0, 3.5] {
        let lhs = exact_exponential_transform(1.0, 1.0, l)?;
        let rhs = 1.0 / (l - exact_exponential_transform(1.0, 1.0, l + 1.0)?);
        worst = worst.max((lhs - rhs).abs());
    }
    let lc = lambda_c_exponential(1.0, 1.0)?.lambda_c;
    let ok = worst < 1e-12 && (lc - 0.746_194_182_903_357_6).abs() < 1e-9;
    Ok((
        ok,
        format!("identity residual {worst:.2e}, λ_c(1,1) = {lc}"),
    ))
}

fn spectral_constant() -> Result<(bool, String)> {
    let k = KernelSpec::Constant { c: 1.0 };
    let sol = solve_stationary(&k, 40.0, 0.01, 2.0)?;
    let v = laplace_of(&sol, 3.0, None)?;
    let r = (3.0 * v - 1.0 - v * v).abs();
    Ok((r < 1e-4, format!("|λĤ - 1 - Ĥ²| = {r:.2e} at λ = 3")))
}

fn asymptotics_exponent() -> Result<(bool, String)> {
    let k = KernelSpec::Constant { c: 1.0 };
    let sol = solve_stationary(&k, 40.0, 0.01, 2.0)?;
    let fit = fit_exponential_power(&sol, (20.0, 40.0))?;
    let ok = (fit.lambda_hat - 2.0).abs() < 0.02 && (-1.7..=-1.3).contains(&fit.p_hat);
    Ok((
        ok,
        format!("λ̂ = {:.4}, p̂ = {:.4}", fit.lambda_hat, fit.p_hat),
    ))
}

fn matrix_determinism() -> Result<(bool, String)> {
    let zero = EnsembleConfig {
        n: 4,
        samples: 2,
        t0: 0.0,
        horizon: 0.5,
        step: 0.1,
        kernel: KernelSpec::Constant { c: 0.0 },
        seed: 1,
    };
    let identity = evolve_trace(&zero)?.mean.iter().all(|&m| m == 1.0);
    let cfg = EnsembleConfig {
        n: 10,
        samples: 4,
        kernel: KernelSpec::Constant { c: 1.0 },
        ..zero
    };
    let repeat = evolve_trace(&cfg)? == evolve_trace(&cfg)?;
    Ok((
        identity && repeat,
        format!("zero kernel identity={identity}, rerun identical={repeat}"),
    ))
}
