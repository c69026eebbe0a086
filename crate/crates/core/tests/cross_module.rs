use kraichnan::matrix_oracle::{evolve_trace, EnsembleConfig};
use kraichnan::ncp::{series_partial_sum, Quadrature};
use kraichnan::spectral::{lambda_c_exponential, lambda_c_vanishing, mittag_leffler_amplitude};
use kraichnan::volterra::{solve_stationary, solve_two_time};
use kraichnan::KernelSpec;

fn ensemble(kernel: KernelSpec, n: usize, samples: usize, horizon: f64) -> EnsembleConfig {
    EnsembleConfig {
        n,
        samples,
        t0: 0.0,
        horizon,
        step: 0.1,
        kernel,
        seed: 11,
    }
}

#[test]
fn matrix_trace_covers_exponential_solution() {
    let kernel = KernelSpec::Exponential { c: 1.0, delta: 1.0 };
    let est = evolve_trace(&ensemble(kernel.clone(), 150, 100, 2.0)).unwrap();
    let sol = solve_stationary(&kernel, 2.0, 1e-3, kernel.default_tilt()).unwrap();
    let h = sol.h_value(sol.len() - 1);
    let last = est.mean.len() - 1;
    let gap = (est.mean[last] - h).abs();
    assert!(
        gap <= 3.0 * est.stderr[last] + 0.05,
        "{} vs {h}",
        est.mean[last]
    );
}

#[test]
fn finite_size_drift_shrinks() {
    let kernel = KernelSpec::Constant { c: 1.0 };
    let sol = solve_stationary(&kernel, 1.0, 1e-3, 2.0).unwrap();
    let target = sol.h_value(sol.len() - 1);
    let mut previous: Option<(f64, f64)> = None;
    for n in [50, 100, 200] {
        let est = evolve_trace(&ensemble(kernel.clone(), n, 40, 1.0)).unwrap();
        let last = est.mean.len() - 1;
        let (gap, err) = ((est.mean[last] - target).abs(), est.stderr[last]);
        if let Some((prev_gap, prev_err)) = previous {
            assert!(
                gap <= prev_gap + 3.0 * (err + prev_err),
                "N={n}: {gap} after {prev_gap}"
            );
        }
        previous = Some((gap, err));
    }
}

#[test]
fn two_time_stationary_kernel_reduces_to_lag() {
    let kernel = KernelSpec::Exponential { c: 1.0, delta: 1.0 };
    let stationary = solve_stationary(&kernel, 3.0, 0.01, 2.0).unwrap();
    let two_time = solve_two_time(&kernel, 1.0, 4.0, 0.01, 2.0).unwrap();
    for lag in [0, 50, 150, 300] {
        let a = two_time.log_h(lag, 0);
        let b = stationary.log_h(lag);
        assert!((a - b).abs() < 1e-8, "lag {lag}: {a} vs {b}");
    }
}

#[test]
fn series_converges_to_solver_for_power_law() {
    let kernel = KernelSpec::PowerLaw { c: 1.0, a: 2.0 };
    let quad = Quadrature {
        samples: 100_000,
        seed: 5,
        ..Quadrature::default()
    };
    let approx = series_partial_sum(&kernel, 0.0, 0.5, 5, &quad).unwrap();
    let sol = solve_stationary(&kernel, 0.5, 1e-4, kernel.default_tilt()).unwrap();
    let gap = (approx.total - sol.h_value(sol.len() - 1)).abs();
    assert!(
        gap <= approx.tail_bound + 3.0 * approx.stderr + 1e-8,
        "{gap}"
    );
}

#[test]
fn amplitude_matches_inverse_derivative() {
    // the residue of Ĥ at λ_c equals 1/F'(λ_c)
    for delta in [0.5, 0.25] {
        let kernel = KernelSpec::Exponential { c: 1.0, delta };
        let sol = solve_stationary(&kernel, 60.0, 0.01, kernel.default_tilt()).unwrap();
        let report = lambda_c_vanishing(&kernel, &sol).unwrap();
        let amp = mittag_leffler_amplitude(1.0, delta).unwrap();
        let a = report.derivative.unwrap();
        assert!(
            (amp.limit - 1.0 / a).abs() < 5e-3 * amp.limit,
            "δ={delta}: {} vs 1/A = {}",
            amp.limit,
            1.0 / a
        );
        let exact = lambda_c_exponential(1.0, delta).unwrap().lambda_c;
        assert!((report.lambda_c - exact).abs() < 1e-3);
    }
}

#[test]
fn flat_kernel_with_stationary_part_approaches_mixed_rate() {
    let kernel = KernelSpec::RatioFlat {
        c: 1.0,
        a: 1.0,
        stationary_part: Some(Box::new(KernelSpec::Exponential { c: 1.0, delta: 1.0 })),
    };
    let rows =
        kraichnan::asymptotics::flat_kernel_limit_check(&kernel, &[20.0, 80.0, 320.0], 20.0, 0.02)
            .unwrap();
    let mixed = KernelSpec::MixedExponential {
        c2: 1.0,
        c1: 1.0,
        delta: 1.0,
    };
    let sol = solve_stationary(&mixed, 40.0, 0.01, mixed.default_tilt()).unwrap();
    let target = kraichnan::spectral::lambda_c_mixed(1.0, 1.0, 1.0, &sol)
        .unwrap()
        .lambda_c;
    let gaps: Vec<f64> = rows.iter().map(|r| (r.slope - target).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.1, "{gaps:?} from {target}");
}
