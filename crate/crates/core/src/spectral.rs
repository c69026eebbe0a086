//! Laplace-domain analysis of stationary solutions and the Lyapunov
//! exponent `λ_c` (the abscissa of convergence of `Ĥ`).
//!
//! Numerical transforms integrate the solution on its grid and add an
//! analytic tail from the late-time fit `H(u) ≈ A e^{λ̂u} u^{p̂}`.

use serde::Serialize;

use crate::asymptotics::{default_window, fit_exponential_power};
use crate::bessel::{bessel_j, bessel_ratio, smallest_zero, MAX_ARGUMENT};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, LagTerm};
use crate::numeric::{bisect, compensated_sum, integrate_half_line, integrate_interval};
use crate::volterra::StationarySolution;

/// Required gap between `λ` and the tail abscissa in [`laplace_of`].
pub const DIVERGENCE_MARGIN: f64 = 0.05;
/// Bisection tolerance of every `λ_c` solver.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Centered-difference step for `A = F'(λ_c)`.
pub const DERIVATIVE_STEP: f64 = 1e-4;
/// Lowest rate accepted in a tail integral whose integrand does not decay algebraically.
const CLAMP_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    BesselZero,
    VanishingFixedPoint,
    MixedSqrt,
    AlgebraicSqrt,
}

/// The two candidate values `1/(2A)` and `1/A` for `lim e^{-λ_c t} H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitCandidates {
    pub half_inverse: f64,
    pub inverse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub kernel: KernelSpec,
    pub lambda_c: f64,
    pub method: SpectralMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_c: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub derivative: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_candidates: Option<LimitCandidates>,
    pub residual: f64,
}

/// Late-time model `ln H(u) ≈ ln_a + lambda_hat u + p_hat ln u` beyond `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub ln_a: f64,
    pub lambda_hat: f64,
    pub p_hat: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceProfile {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub tail: TailModel,
    pub horizon: f64,
}

/// A stationary solution prepared for Laplace transforms.
#[derive(Debug, Clone)]
pub struct Transform<'a> {
    solution: &'a StationarySolution,
    tail: TailModel,
}

impl<'a> Transform<'a> {
    pub fn new(solution: &'a StationarySolution) -> Result<Self> {
        let fit = fit_exponential_power(solution, default_window(solution))?;
        Ok(Transform {
            solution,
            tail: TailModel {
                ln_a: fit.ln_a_hat,
                lambda_hat: fit.lambda_hat,
                p_hat: fit.p_hat,
                horizon: solution.end_time(),
            },
        })
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    /// `∫_0^∞ e^{-λu} H(u) w(u) du` with `w = Σ terms`.
    ///
    /// When `clamped`, tail rates below the convergence threshold are raised
    /// to it instead of failing, which keeps the transform finite and
    /// continuous in `λ`; root finders rely on this near the abscissa.
    fn integral(&self, lambda: f64, terms: &[LagTerm], clamped: bool) -> Result<f64> {
        let sol = self.solution;
        let n = sol.len();
        let h = sol.step;
        let shift = lambda - sol.tilt;
        let weight = |u: f64| terms.iter().map(|t| t.eval(u)).sum::<f64>();
        let body = compensated_sum((0..n).map(|i| {
            let u = sol.time(i);
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * sol.values[i] * (-shift * u).exp() * weight(u)
        })) * h;

        let tail = self.tail;
        let end = tail.horizon;
        let mut rest = 0.0;
        for term in terms {
            let q = tail.p_hat - term.power;
            let mut beta = lambda + term.rate - tail.lambda_hat;
            let floor = if q < -1.0 { 0.0 } else { CLAMP_FLOOR };
            if clamped {
                beta = beta.max(floor);
            } else if beta < DIVERGENCE_MARGIN {
                return Err(Error::Divergence {
                    lambda,
                    abscissa: tail.lambda_hat - term.rate,
                });
            }
            let scale = term.coef * (tail.ln_a - beta * end).exp();
            let shape = integrate_half_line(
                |x| {
                    let u = end + x;
                    let mut v = (-beta * x).exp() * u.powf(tail.p_hat);
                    if term.power != 0.0 {
                        v *= (1.0 + u).powf(-term.power);
                    }
                    v
                },
                1e-12,
            );
            rest += scale * shape;
        }
        Ok(body + rest)
    }

    /// `Ĥ(λ)` or, with a stationary weight kernel `k`, `(Hk)^(λ)`.
    pub fn laplace(&self, lambda: f64, weight: Option<&KernelSpec>) -> Result<f64> {
        let terms = weight_terms(weight)?;
        self.integral(lambda, &terms, false)
    }
}

fn weight_terms(weight: Option<&KernelSpec>) -> Result<Vec<LagTerm>> {
    match weight {
        None => Ok(vec![LagTerm {
            coef: 1.0,
            rate: 0.0,
            power: 0.0,
        }]),
        Some(k) => k
            .lag_terms()
            .ok_or_else(|| Error::Usage("transform weight must be a stationary kernel".into())),
    }
}

/// `∫_0^∞ e^{-λu} H(u) w(u) du` for a stationary solution, `w ≡ 1` by default.
pub fn laplace_of(
    solution: &StationarySolution,
    lambda: f64,
    weight: Option<&KernelSpec>,
) -> Result<f64> {
    Transform::new(solution)?.laplace(lambda, weight)
}

/// `Ĥ` on a grid of rates.
pub fn laplace_profile(solution: &StationarySolution, lambdas: &[f64]) -> Result<LaplaceProfile> {
    let transform = Transform::new(solution)?;
    let values = lambdas
        .iter()
        .map(|&l| transform.laplace(l, None))
        .collect::<Result<Vec<_>>>()?;
    Ok(LaplaceProfile {
        lambdas: lambdas.to_vec(),
        values,
        tail: transform.tail(),
        horizon: solution.end_time(),
    })
}

/// Exact `Ĥ(λ)` for `k(u) = c e^{-δu}`: `c^{-1/2} J_{λ/δ}(z) / J_{λ/δ-1}(z)`, `z = 2 sqrt(c)/δ`.
pub fn exact_exponential_transform(c: f64, delta: f64, lambda: f64) -> Result<f64> {
    check_exponential(c, delta)?;
    let z = 2.0 * c.sqrt() / delta;
    Ok(bessel_ratio(lambda / delta, z)? / c.sqrt())
}

fn check_exponential(c: f64, delta: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite() && delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!(
            "exponential kernel needs c > 0 and delta > 0, got c={c}, delta={delta}"
        )));
    }
    Ok(())
}

/// Largest order `ν` with `J_ν(z) = 0`, i.e. `j_ν = z`, located through
/// sign changes of `J_ν(z) / J_{ν+1}(z)` from the ratio recurrence.
fn critical_order_by_ratio(z: f64) -> Result<(f64, f64)> {
    // a pole of the ratio means J_ν(z) = 0 exactly
    let g = |nu: f64| match bessel_ratio(nu + 1.0, z) {
        Ok(r) => Ok(1.0 / r),
        Err(Error::Pole { .. }) => Ok(0.0),
        Err(e) => Err(e),
    };
    let mut hi = z;
    if !(g(hi)? > 0.0) {
        return Err(Error::Internal(format!(
            "J_z({z}) / J_(z+1)({z}) is not positive"
        )));
    }
    loop {
        let lo = hi - 0.5;
        if lo <= -1.0 {
            return Err(Error::Internal(format!(
                "no Bessel order with j = {z} found above -1"
            )));
        }
        let g_lo = g(lo)?;
        if g_lo == 0.0 {
            return Ok((lo, 0.0));
        }
        if g_lo < 0.0 {
            let nu = bisect(
                |v| g(v).unwrap_or(f64::NAN),
                lo,
                hi,
                1e-13,
                "Bessel ratio sign change",
            )?;
            let residual = g(nu).map(f64::abs).unwrap_or(0.0);
            return Ok((nu, residual));
        }
        hi = lo;
    }
}

/// `λ_c` for `k(u) = c e^{-δu}` from `j_{λ_c/δ - 1} = 2 sqrt(c)/δ`.
///
/// For `z ≤ 20` the order is bisected on the smallest zero computed from
/// the power series; beyond that the series loses too much to cancellation
/// and the order is located through the ratio continued fraction instead.
pub fn lambda_c_exponential(c: f64, delta: f64) -> Result<SpectralReport> {
    check_exponential(c, delta)?;
    let z = 2.0 * c.sqrt() / delta;
    let (nu, residual) = if z <= MAX_ARGUMENT {
        let nu = bisect(
            |nu| smallest_zero(nu).map(|j| j - z).unwrap_or(f64::NAN),
            -1.0 + 1e-9,
            z,
            1e-13,
            "critical Bessel order",
        )?;
        (nu, (smallest_zero(nu)? - z).abs())
    } else {
        critical_order_by_ratio(z)?
    };
    Ok(SpectralReport {
        kernel: KernelSpec::Exponential { c, delta },
        lambda_c: delta * (nu + 1.0),
        method: SpectralMethod::BesselZero,
        z: Some(z),
        nu_c: Some(nu),
        derivative: None,
        limit_candidates: None,
        residual,
    })
}

/// Small-`δ` approximation `2 sqrt(c) - 2.34 c^{1/3} δ^{2/3}`.
pub fn lambda_c_asymptotic(c: f64, delta: f64) -> f64 {
    2.0 * c.sqrt() - 2.34 * c.cbrt() * delta.powf(2.0 / 3.0)
}

fn require_kernel(solution: &StationarySolution, kernel: &KernelSpec) -> Result<()> {
    if &solution.kernel != kernel {
        return Err(Error::Usage(format!(
            "solution was computed for {} but {} was requested",
            solution.kernel.to_json(),
            kernel.to_json()
        )));
    }
    Ok(())
}

fn bracketing_hint(err: Error, what: &str) -> Error {
    match err {
        Error::Bracketing {
            lo, hi, f_lo, f_hi, ..
        } => Error::Bracketing {
            lo,
            hi,
            f_lo,
            f_hi,
            hint: format!("{what}; the solution horizon may be too short for the tail fit"),
        },
        other => other,
    }
}

/// `λ_c` for an integrable kernel as the root of `F(λ) = λ - (Hk)^(λ)`,
/// together with `A = F'(λ_c)`.
pub fn lambda_c_vanishing(
    kernel: &KernelSpec,
    solution: &StationarySolution,
) -> Result<SpectralReport> {
    if !matches!(
        kernel,
        KernelSpec::PowerLaw { .. } | KernelSpec::Exponential { .. }
    ) {
        return Err(Error::Usage(
            "the vanishing-kernel solver takes power_law or exponential kernels".into(),
        ));
    }
    require_kernel(solution, kernel)?;
    let transform = Transform::new(solution)?;
    if transform.tail.lambda_hat * transform.tail.horizon < 1e-6f64.ln().abs() {
        return Err(Error::Domain(format!(
            "horizon {} too short: exp(-λ̂T) must be below 1e-6 (λ̂ = {})",
            transform.tail.horizon, transform.tail.lambda_hat
        )));
    }
    let terms = kernel.lag_terms().expect("stationary kernel");
    let f = |l: f64| transform.integral(l, &terms, true).map(|v| l - v);
    let root = bisect(
        |l| f(l).unwrap_or(f64::NAN),
        1e-6,
        kernel.default_tilt(),
        ROOT_TOLERANCE,
        "F(λ) = λ - (Hk)^(λ)",
    )
    .map_err(|e| bracketing_hint(e, "no sign change of λ - (Hk)^(λ)"))?;
    let residual = f(root)?.abs();
    let derivative =
        (f(root + DERIVATIVE_STEP)? - f(root - DERIVATIVE_STEP)?) / (2.0 * DERIVATIVE_STEP);
    if !(derivative >= 1.0) {
        return Err(Error::Internal(format!(
            "F'(λ_c) = {derivative} < 1 contradicts the monotone transform"
        )));
    }
    Ok(SpectralReport {
        kernel: kernel.clone(),
        lambda_c: root,
        method: SpectralMethod::VanishingFixedPoint,
        z: None,
        nu_c: None,
        derivative: Some(derivative),
        limit_candidates: Some(LimitCandidates {
            half_inverse: 0.5 / derivative,
            inverse: 1.0 / derivative,
        }),
        residual,
    })
}

fn sqrt_regime(
    kernel: KernelSpec,
    solution: &StationarySolution,
    c2: f64,
    c1: f64,
    shift: f64,
    weight: LagTerm,
    method: SpectralMethod,
) -> Result<SpectralReport> {
    require_kernel(solution, &kernel)?;
    let transform = Transform::new(solution)?;
    let floor = 2.0 * c2.sqrt();
    let f = |l: f64| {
        transform
            .integral(l + shift, &[weight], true)
            .map(|v| l - c1 * v - floor)
    };
    let root = bisect(
        |l| f(l).unwrap_or(f64::NAN),
        floor,
        2.0 * (c2 + c1).sqrt(),
        ROOT_TOLERANCE,
        "λ - c1 X(λ) = 2 sqrt(c2)",
    )
    .map_err(|e| bracketing_hint(e, "no sign change in [2 sqrt(c2), 2 sqrt(c2 + c1)]"))?;
    Ok(SpectralReport {
        kernel,
        lambda_c: root,
        method,
        z: None,
        nu_c: None,
        derivative: None,
        limit_candidates: None,
        residual: f(root)?.abs(),
    })
}

/// `λ_c` for `k(u) = c2 + c1 e^{-δu}` from `λ - c1 Ĥ(λ+δ) = 2 sqrt(c2)`.
pub fn lambda_c_mixed(
    c2: f64,
    c1: f64,
    delta: f64,
    solution: &StationarySolution,
) -> Result<SpectralReport> {
    let kernel = KernelSpec::MixedExponential { c2, c1, delta };
    kernel.validate()?;
    let unit = LagTerm {
        coef: 1.0,
        rate: 0.0,
        power: 0.0,
    };
    sqrt_regime(
        kernel,
        solution,
        c2,
        c1,
        delta,
        unit,
        SpectralMethod::MixedSqrt,
    )
}

/// `λ_c` for `k(u) = c2 + c1 (1+u)^{-a}` from `λ - c1 Ĝ(λ) = 2 sqrt(c2)`,
/// `Ĝ` being the transform of `H(u)(1+u)^{-a}`.
pub fn lambda_c_algebraic(
    c2: f64,
    c1: f64,
    a: f64,
    solution: &StationarySolution,
) -> Result<SpectralReport> {
    let kernel = KernelSpec::AlgebraicMixed { c2, c1, a };
    kernel.validate()?;
    let decay = LagTerm {
        coef: 1.0,
        rate: 0.0,
        power: a,
    };
    sqrt_regime(
        kernel,
        solution,
        c2,
        c1,
        0.0,
        decay,
        SpectralMethod::AlgebraicSqrt,
    )
}

/// `Ĥ` evaluated through the clamped tail, valid down to `λ_c` itself for
/// the `t^{-3/2}` regimes.
pub fn laplace_near_abscissa(solution: &StationarySolution, lambda: f64) -> Result<f64> {
    let unit = LagTerm {
        coef: 1.0,
        rate: 0.0,
        power: 0.0,
    };
    Transform::new(solution)?.integral(lambda, &[unit], true)
}

/// Closest approach to the abscissa used by quadrature.
pub const ABSCISSA_GAP: f64 = 0.01;

/// `Ĥ(λ_c⁺)` for the square-root regimes, from `Ĥ(λ) ≈ Ĥ(λ_c) - b sqrt(λ - λ_c)`
/// fitted through quadrature values at `λ_c + ε` and `λ_c + 4ε`, `ε = ABSCISSA_GAP`.
pub fn laplace_at_abscissa(solution: &StationarySolution, lambda_c: f64) -> Result<f64> {
    let near = laplace_near_abscissa(solution, lambda_c + ABSCISSA_GAP)?;
    let far = laplace_near_abscissa(solution, lambda_c + 4.0 * ABSCISSA_GAP)?;
    Ok(2.0 * near - far)
}

/// `lim e^{-λ_c t} H(t)` for `k(u) = c e^{-δu}` from the residue of the
/// exact transform at `λ_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitude {
    pub z: f64,
    pub nu_c: f64,
    /// `z J_{ν_c+1}(z)^2 / (2 ν_c ∫_0^z J_{ν_c}(t)^2 dt/t)`, the residue in the order variable.
    pub order_residue: f64,
    /// The time-domain limit, `order_residue · δ / sqrt(c)`.
    pub limit: f64,
}

pub fn mittag_leffler_amplitude(c: f64, delta: f64) -> Result<Amplitude> {
    check_exponential(c, delta)?;
    let z = 2.0 * c.sqrt() / delta;
    if z > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "amplitude needs z = 2 sqrt(c)/delta <= {MAX_ARGUMENT}, got {z}"
        )));
    }
    let report = lambda_c_exponential(c, delta)?;
    let nu = report.nu_c.expect("exponential report carries the order");
    if nu <= 0.0 {
        return Err(Error::Domain(format!(
            "critical order {nu} <= 0: the integral of J^2/t diverges at 0"
        )));
    }
    let integrand = |t: f64| {
        let j = bessel_j(nu, t).map(|e| e.value).unwrap_or(f64::NAN);
        j * j / t
    };
    let integral = integrate_interval(integrand, 0.0, z, 1e-12);
    let next = bessel_j(nu + 1.0, z)?.value;
    let order_residue = z * next * next / (2.0 * nu * integral);
    Ok(Amplitude {
        z,
        nu_c: nu,
        order_residue,
        limit: order_residue * delta / c.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volterra::solve_stationary;

    fn solve(k: &KernelSpec, horizon: f64) -> StationarySolution {
        solve_stationary(k, horizon, 0.01, k.default_tilt()).unwrap()
    }

    #[test]
    fn zero_kernel_transform() {
        let sol = solve_stationary(&KernelSpec::Constant { c: 0.0 }, 20.0, 1e-3, 0.0).unwrap();
        let v = laplace_of(&sol, 2.0, None).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn constant_kernel_laplace_relation() {
        let sol = solve(&KernelSpec::Constant { c: 1.0 }, 40.0);
        let v = laplace_of(&sol, 3.0, None).unwrap();
        assert!((3.0 * v - 1.0 - v * v).abs() < 1e-4);
        // closed form (λ - sqrt(λ²-4))/2
        assert!((v - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-4);
    }

    #[test]
    fn exponential_kernel_matches_bessel_ratio() {
        let sol = solve(&KernelSpec::Exponential { c: 1.0, delta: 1.0 }, 40.0);
        let v = laplace_of(&sol, 3.0, None).unwrap();
        assert!((v - 0.365_450_152_243_867_9).abs() < 1e-4, "{v}");
    }

    #[test]
    fn exact_transform_identity() {
        for (c, d) in [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)] {
            for l in [1.5, 2.5, 4.0] {
                let lhs = exact_exponential_transform(c, d, l).unwrap();
                let rhs = 1.0 / (l - c * exact_exponential_transform(c, d, l + d).unwrap());
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let sol = solve(&KernelSpec::Constant { c: 1.0 }, 30.0);
        assert!(matches!(
            laplace_of(&sol, 2.01, None),
            Err(Error::Divergence { .. })
        ));
        assert!(matches!(
            laplace_of(&sol, 1.0, None),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn profile_is_decreasing() {
        let sol = solve(&KernelSpec::Exponential { c: 1.0, delta: 0.5 }, 40.0);
        let grid: Vec<f64> = (0..40).map(|i| 1.2 + 0.25 * i as f64).collect();
        let profile = laplace_profile(&sol, &grid).unwrap();
        assert!(profile.values.windows(2).all(|w| w[0] > w[1]));
        let far = laplace_of(&sol, 50.0, None).unwrap();
        assert!((50.0 * far - 1.0).abs() < 0.05);
    }

    #[test]
    fn exponential_lambda_c_reference_values() {
        let cases = [
            (1.0, 1.0, 0.746_194_182_903_357_6),
            (1.0, 2.0, 0.450_870_974_312_075_7),
            (1.0, 0.5, 1.062_742_898_866_347),
            (1.0, 0.1, 1.600_509_781_468_506_7),
            (1.0, 0.05, 1.734_351_929_448_585_7),
            (1.0, 0.02, 1.848_222_091_501_483_8),
        ];
        for (c, d, want) in cases {
            let r = lambda_c_exponential(c, d).unwrap();
            assert!(
                (r.lambda_c - want).abs() < 1e-9,
                "δ={d}: {} vs {want}",
                r.lambda_c
            );
            assert!(r.residual < 1e-8);
        }
        let r = lambda_c_exponential(1.0, 2.0).unwrap();
        assert!(r.lambda_c > 0.0 && r.lambda_c < 1.0 && r.nu_c.unwrap() < -0.5);
    }

    #[test]
    fn ratio_route_agrees_with_zero_route() {
        for z in [2.0, 4.0, 10.0, 19.5] {
            let by_zero = lambda_c_exponential(1.0, 2.0 / z).unwrap().nu_c.unwrap();
            let (by_ratio, _) = critical_order_by_ratio(z).unwrap();
            assert!(
                (by_zero - by_ratio).abs() < 1e-9,
                "z={z}: {by_zero} vs {by_ratio}"
            );
        }
    }

    #[test]
    fn exponential_scaling_and_small_delta() {
        for (c, d) in [(4.0, 1.0), (0.25, 0.3), (9.0, 2.0)] {
            let lhs = lambda_c_exponential(c, d).unwrap().lambda_c;
            let rhs = c.sqrt() * lambda_c_exponential(1.0, d / c.sqrt()).unwrap().lambda_c;
            assert!((lhs - rhs).abs() < 1e-8);
        }
        let l = lambda_c_exponential(1.0, 0.01).unwrap().lambda_c;
        assert!(
            l <= 2.0 && l >= 2.0 - 2.34 * 0.01f64.powf(2.0 / 3.0) - 0.05,
            "{l}"
        );
        assert!((lambda_c_asymptotic(1.0, 0.001) - 1.9766).abs() < 1e-12);
        assert_eq!(lambda_c_asymptotic(4.0, 0.0), 4.0);
        for d in [0.02, 0.05, 0.1] {
            let gap = (lambda_c_exponential(1.0, d).unwrap().lambda_c
                - lambda_c_asymptotic(1.0, d))
            .abs();
            assert!(gap / d < 1.5, "δ={d}: gap/δ = {}", gap / d);
        }
    }

    #[test]
    fn vanishing_solver_cross_checks() {
        for d in [1.0, 2.0] {
            let k = KernelSpec::Exponential { c: 1.0, delta: d };
            let sol = solve(&k, 40.0);
            let r = lambda_c_vanishing(&k, &sol).unwrap();
            let exact = lambda_c_exponential(1.0, d).unwrap().lambda_c;
            assert!(
                (r.lambda_c - exact).abs() < 1e-3,
                "δ={d}: {} vs {exact}",
                r.lambda_c
            );
            assert!(r.residual < 1e-8);
            assert!(r.derivative.unwrap() >= 1.0);
        }
        let k = KernelSpec::PowerLaw { c: 1.0, a: 2.0 };
        let sol = solve(&k, 60.0);
        let r = lambda_c_vanishing(&k, &sol).unwrap();
        assert!(
            r.lambda_c > 0.0 && r.lambda_c < 2.0 && r.residual < 1e-8,
            "{r:?}"
        );
    }

    #[test]
    fn mixed_and_algebraic_regimes() {
        let k = KernelSpec::MixedExponential {
            c2: 1.0,
            c1: 1.0,
            delta: 1.0,
        };
        let sol = solve(&k, 40.0);
        let r = lambda_c_mixed(1.0, 1.0, 1.0, &sol).unwrap();
        assert!(
            r.lambda_c > 2.0 && r.lambda_c < 8f64.sqrt() && r.residual < 1e-8,
            "{r:?}"
        );
        let edge = laplace_at_abscissa(&sol, r.lambda_c).unwrap();
        assert!((edge - 1.0).abs() < 2e-2, "Ĥ(λ_c+) = {edge}");
        let c2 = 4.0;
        let k = KernelSpec::MixedExponential {
            c2,
            c1: 1.0,
            delta: 0.5,
        };
        let sol = solve(&k, 40.0);
        let r = lambda_c_mixed(c2, 1.0, 0.5, &sol).unwrap();
        let edge = laplace_at_abscissa(&sol, r.lambda_c).unwrap();
        assert!((edge - 0.5).abs() < 2e-2, "Ĥ(λ_c+) = {edge}");

        let tiny = KernelSpec::MixedExponential {
            c2: 1.0,
            c1: 1e-8,
            delta: 1.0,
        };
        let r = lambda_c_mixed(1.0, 1e-8, 1.0, &solve(&tiny, 40.0)).unwrap();
        assert!((r.lambda_c - 2.0).abs() < 1e-4);

        let k = KernelSpec::AlgebraicMixed {
            c2: 1.0,
            c1: 1.0,
            a: 2.0,
        };
        let r = lambda_c_algebraic(1.0, 1.0, 2.0, &solve(&k, 40.0)).unwrap();
        assert!(
            r.lambda_c > 2.0 && r.lambda_c < 8f64.sqrt() && r.residual < 1e-8,
            "{r:?}"
        );
        let tiny = KernelSpec::AlgebraicMixed {
            c2: 1.0,
            c1: 1e-8,
            a: 2.0,
        };
        let r = lambda_c_algebraic(1.0, 1e-8, 2.0, &solve(&tiny, 40.0)).unwrap();
        assert!((r.lambda_c - 2.0).abs() < 1e-4);
    }

    #[test]
    fn amplitude_values() {
        let a = mittag_leffler_amplitude(1.0, 0.5).unwrap();
        assert!((a.order_residue - 0.749_271_9).abs() < 1e-6, "{a:?}");
        assert!((a.limit - 0.374_636_0).abs() < 1e-6);
        let b = mittag_leffler_amplitude(4.0, 1.0).unwrap();
        assert!((b.limit - a.limit).abs() < 1e-10);
        let c = mittag_leffler_amplitude(1.0, 0.1).unwrap();
        assert!((c.limit - 0.091_533_8).abs() < 1e-6, "{c:?}");
        assert!(matches!(
            mittag_leffler_amplitude(1.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn amplitude_matches_time_domain() {
        let k = KernelSpec::Exponential { c: 1.0, delta: 0.5 };
        let sol = solve(&k, 40.0);
        let amp = mittag_leffler_amplitude(1.0, 0.5).unwrap();
        let lc = lambda_c_exponential(1.0, 0.5).unwrap().lambda_c;
        let last = sol.len() - 1;
        let observed = (sol.log_h(last) - lc * sol.time(last)).exp();
        assert!(
            (observed - amp.limit).abs() < 0.05 * amp.limit,
            "{observed} vs {}",
            amp.limit
        );
    }

    #[test]
    fn transform_identities_across_families() {
        let kernels = [
            KernelSpec::Constant { c: 1.0 },
            KernelSpec::Exponential { c: 1.0, delta: 1.0 },
            KernelSpec::MixedExponential {
                c2: 1.0,
                c1: 0.5,
                delta: 1.0,
            },
            KernelSpec::PowerLaw { c: 1.0, a: 2.0 },
            KernelSpec::AlgebraicMixed {
                c2: 1.0,
                c1: 1.0,
                a: 2.0,
            },
        ];
        for k in &kernels {
            let sol = solve(k, 40.0);
            let t = Transform::new(&sol).unwrap();
            let lc = t.tail().lambda_hat;
            for off in [0.5, 1.0, 2.0] {
                let l = lc + off;
                let h = t.laplace(l, None).unwrap();
                let hk = t.laplace(l, Some(k)).unwrap();
                let r = (l * h - 1.0 - h * hk).abs();
                assert!(r < 1e-3, "{}: λ={l} residual {r}", k.to_json());
            }
        }
        let k = KernelSpec::Exponential { c: 1.0, delta: 1.0 };
        let sol = solve(&k, 40.0);
        let t = Transform::new(&sol).unwrap();
        for l in [1.5, 2.0, 3.0] {
            let r = t.laplace(l, None).unwrap() - 1.0 / (l - t.laplace(l + 1.0, None).unwrap());
            assert!(r.abs() < 1e-3);
        }
    }
}
