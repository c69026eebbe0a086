//! Monte Carlo check of the matrix model: symmetric `N×N` matrices whose
//! entries are Gaussian processes with covariance `k/N`, propagated by
//! `∂_s X = L(s) X`, `X(t0) = 1`, and averaged through `(1/N) tr X`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::{compensated_sum, grid_intervals};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub t0: f64,
    pub horizon: f64,
    pub step: f64,
    pub kernel: KernelSpec,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<usize> {
        if self.n < 2 {
            return Err(Error::Domain(format!(
                "matrix dimension must be >= 2, got {}",
                self.n
            )));
        }
        if self.samples == 0 {
            return Err(Error::Domain("sample count must be >= 1".into()));
        }
        let span = self.horizon - self.t0;
        if !(self.t0 >= 0.0 && self.step > 0.0 && span > 0.0 && span.is_finite()) {
            return Err(Error::Domain(format!(
                "need 0 <= t0 < T and h > 0, got t0={}, T={}, h={}",
                self.t0, self.horizon, self.step
            )));
        }
        let steps = grid_intervals(span, self.step);
        if steps == 0 || (steps as f64 * self.step - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::Domain(format!(
                "step {} does not divide T - t0 = {span}",
                self.step
            )));
        }
        self.kernel.validate()?;
        Ok(steps)
    }

    fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEstimate {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub config: EnsembleConfig,
}

impl TraceEstimate {
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        let c = &self.config;
        writeln!(
            out,
            "# kernel={}, N={}, samples={}, t0={}, T={}, h={}, seed={}",
            c.kernel.to_json(),
            c.n,
            c.samples,
            c.t0,
            c.horizon,
            c.step,
            c.seed
        )?;
        writeln!(out, "s,mean,trace_stderr")?;
        for ((t, m), e) in self.times.iter().zip(&self.mean).zip(&self.stderr) {
            writeln!(out, "{t},{m},{e}")?;
        }
        Ok(())
    }
}

/// Lower Cholesky factor of the grid covariance `K + εI`, `ε = 1e-10 max diag`.
/// `None` for an identically zero covariance.
fn covariance_factor(config: &EnsembleConfig, steps: usize) -> Result<Option<DMatrix<f64>>> {
    let m = steps + 1;
    let cov = DMatrix::from_fn(m, m, |i, j| {
        let (a, b) = (config.time(i), config.time(j));
        config.kernel.value(a.max(b), a.min(b))
    });
    factor_covariance(cov)
}

fn factor_covariance(cov: DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
    let m = cov.nrows();
    let max_diag = (0..m).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    if max_diag == 0.0 {
        return Ok(None);
    }
    let jitter = 1e-10 * max_diag;
    let shifted = &cov + DMatrix::identity(m, m) * jitter;
    match shifted.clone().cholesky() {
        Some(ch) => Ok(Some(ch.l())),
        None => {
            // locate the failing pivot for the report
            let mut pivot = 0;
            for k in 1..=m {
                if shifted
                    .view((0, 0), (k, k))
                    .clone_owned()
                    .cholesky()
                    .is_none()
                {
                    pivot = k - 1;
                    break;
                }
            }
            Err(Error::NotPsd { pivot, jitter })
        }
    }
}

fn sample_with(
    config: &EnsembleConfig,
    steps: usize,
    factor: Option<&DMatrix<f64>>,
    rng: &mut ChaCha8Rng,
) -> Vec<DMatrix<f64>> {
    let n = config.n;
    let m = steps + 1;
    let Some(factor) = factor else {
        return vec![DMatrix::zeros(n, n); m];
    };
    let pairs = n * (n + 1) / 2;
    let noise = DMatrix::from_fn(m, pairs, |_, _| StandardNormal.sample(rng));
    let paths = factor * noise / (n as f64).sqrt();
    let mut slices = vec![DMatrix::zeros(n, n); m];
    let mut col = 0;
    for p in 0..n {
        for q in p..n {
            for (i, slice) in slices.iter_mut().enumerate() {
                let v = paths[(i, col)];
                slice[(p, q)] = v;
                slice[(q, p)] = v;
            }
            col += 1;
        }
    }
    slices
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One realization `L(t0 + i h)`, `i = 0..=steps`, drawn from stream 0 of the seed.
pub fn sample_process(config: &EnsembleConfig) -> Result<Vec<DMatrix<f64>>> {
    let steps = config.validate()?;
    let factor = covariance_factor(config, steps)?;
    Ok(sample_with(
        config,
        steps,
        factor.as_ref(),
        &mut sample_rng(config.seed, 0),
    ))
}

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_749_895).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..60 {
        let w = a * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= 1e-6 * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    // power iteration approaches from below; pad for safety
    estimate * 1.05
}

/// `(1/N) tr X(t0 + i h)` along one realization.
fn trace_path(config: &EnsembleConfig, slices: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    let n = config.n;
    let h = config.step;
    for (i, l) in slices.iter().enumerate() {
        let norm = h * spectral_norm(l);
        if norm > 1.0 {
            return Err(Error::StepSize {
                norm,
                at: config.time(i),
            });
        }
    }
    let mut x = DMatrix::<f64>::identity(n, n);
    let mut traces = Vec::with_capacity(slices.len());
    traces.push(1.0);
    for w in slices.windows(2) {
        let (start, end) = (&w[0], &w[1]);
        let mid = (start + end) * 0.5;
        let k1 = start * &x;
        let k2 = &mid * (&x + &k1 * (h / 2.0));
        let k3 = &mid * (&x + &k2 * (h / 2.0));
        let k4 = end * (&x + &k3 * h);
        x += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        traces.push(x.trace() / n as f64);
    }
    Ok(traces)
}

/// Sample mean and standard error of `(1/N) tr X` over the ensemble.
/// Sample `j` draws from ChaCha stream `j`, so the result is independent of
/// how rayon schedules the work.
pub fn evolve_trace(config: &EnsembleConfig) -> Result<TraceEstimate> {
    let steps = config.validate()?;
    let factor = covariance_factor(config, steps)?;
    let paths: Vec<Vec<f64>> = (0..config.samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = sample_rng(config.seed, j as u64);
            let slices = sample_with(config, steps, factor.as_ref(), &mut rng);
            trace_path(config, &slices)
        })
        .collect::<Result<_>>()?;

    let count = config.samples as f64;
    let mut mean = Vec::with_capacity(steps + 1);
    let mut stderr = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let m = compensated_sum(paths.iter().map(|p| p[i])) / count;
        let var = if config.samples > 1 {
            compensated_sum(paths.iter().map(|p| (p[i] - m).powi(2))) / (count - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        stderr.push((var / count).sqrt());
    }
    mean[0] = 1.0;
    stderr[0] = 0.0;
    Ok(TraceEstimate {
        times: (0..=steps).map(|i| config.time(i)).collect(),
        mean,
        stderr,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::semicircle_mgf;

    fn config(kernel: KernelSpec, n: usize, samples: usize, horizon: f64) -> EnsembleConfig {
        EnsembleConfig {
            n,
            samples,
            t0: 0.0,
            horizon,
            step: 0.1,
            kernel,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        let good = config(KernelSpec::Constant { c: 1.0 }, 4, 1, 1.0);
        assert_eq!(good.validate().unwrap(), 10);
        let mut bad = good.clone();
        bad.n = 1;
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.step = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.samples = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_kernel_is_identity() {
        let cfg = config(KernelSpec::Constant { c: 0.0 }, 5, 3, 1.0);
        assert!(sample_process(&cfg)
            .unwrap()
            .iter()
            .all(|l| l.iter().all(|&v| v == 0.0)));
        let est = evolve_trace(&cfg).unwrap();
        assert!(est.mean.iter().all(|&m| m == 1.0));
        assert!(est.stderr.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn constant_kernel_paths_are_frozen() {
        let slices = sample_process(&config(KernelSpec::Constant { c: 1.0 }, 6, 1, 1.0)).unwrap();
        for l in &slices[1..] {
            assert!((l - &slices[0]).amax() < 1e-4);
            assert_eq!(l, &l.transpose());
        }
    }

    #[test]
    fn second_moment_matches_kernel_diagonal() {
        let cfg = config(KernelSpec::Exponential { c: 2.0, delta: 1.0 }, 100, 1, 0.5);
        let steps = cfg.validate().unwrap();
        let factor = covariance_factor(&cfg, steps).unwrap();
        let moments: Vec<f64> = (0..200)
            .map(|j| {
                let slices =
                    sample_with(&cfg, steps, factor.as_ref(), &mut sample_rng(cfg.seed, j));
                let l = &slices[steps];
                (l * l).trace() / cfg.n as f64
            })
            .collect();
        let m = moments.iter().sum::<f64>() / 200.0;
        let sd =
            (moments.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 199.0).sqrt() / 200f64.sqrt();
        assert!((m - 2.0).abs() < 3.0 * sd, "{m} ± {sd}");
    }

    #[test]
    fn not_psd_is_reported() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        match factor_covariance(cov) {
            Err(Error::NotPsd { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("{other:?}"),
        }
        let rank_one = DMatrix::from_element(4, 4, 2.0);
        assert!(factor_covariance(rank_one).unwrap().is_some());
    }

    #[test]
    fn step_size_guard() {
        let mut cfg = config(KernelSpec::Constant { c: 100.0 }, 50, 1, 1.0);
        cfg.step = 0.5;
        assert!(matches!(evolve_trace(&cfg), Err(Error::StepSize { .. })));
    }

    #[test]
    fn constant_kernel_trace_tracks_semicircle() {
        let est = evolve_trace(&config(KernelSpec::Constant { c: 1.0 }, 60, 40, 1.0)).unwrap();
        let last = *est.mean.last().unwrap();
        assert!((last - semicircle_mgf(1.0)).abs() < 0.1, "{last}");
        assert_eq!(est.mean[0], 1.0);
    }

    #[test]
    fn seed_determinism_across_pools() {
        let cfg = config(KernelSpec::Exponential { c: 1.0, delta: 1.0 }, 20, 12, 1.0);
        let a = evolve_trace(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| evolve_trace(&cfg)).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        assert_eq!(a, single.install(|| evolve_trace(&cfg)).unwrap());
    }

    #[test]
    fn csv_layout() {
        let est = evolve_trace(&config(KernelSpec::Constant { c: 0.0 }, 2, 1, 0.2)).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# kernel="));
        assert_eq!(lines[1], "s,mean,trace_stderr");
        assert_eq!(lines.len(), 5);
    }
}
