//! Time-domain solvers.
//!
//! Both solvers work with the tilted unknown `G = e^{-μ(s-t)} H(s,t)`, which
//! satisfies `∂_s G = -μ G + ∫_t^s G(s,u) G(u,t) k(s,u) du` with the same
//! memory term as the untilted equation. The linear `-μG` part is integrated
//! exactly (exponential integrating factor over each step), so solutions for
//! different tilts agree up to rounding.
//!
//! Each step is one rectangle predictor followed by one trapezoid corrector.
//! The memory integral uses the trapezoid rule with compensated summation in
//! ascending index order.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::numeric::{grid_intervals, CompensatedSum};

/// Largest two-time grid (intervals per side) the solver accepts.
pub const TWO_TIME_BUDGET: usize = 3000;

/// Tilted solution `G[i] = e^{-μ ih} H(ih)` of the stationary equation.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub step: f64,
    pub horizon: f64,
    pub tilt: f64,
    pub values: Vec<f64>,
    pub kernel: KernelSpec,
}

/// Tilted solution `G[j][i] = e^{-μ(s_j - t_i)} H(s_j, t_i)` on the grid
/// `t_i = base + ih ≤ s_j = base + jh`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoTimeSolution {
    pub base: f64,
    pub step: f64,
    pub horizon: f64,
    pub tilt: f64,
    rows: Vec<Vec<f64>>,
    pub kernel: KernelSpec,
}

fn check_grid(horizon: f64, step: f64, tilt: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!(
            "horizon T must be > 0, got {horizon}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("step h must be > 0, got {step}")));
    }
    if !(tilt >= 0.0 && tilt.is_finite()) {
        return Err(Error::Domain(format!("tilt mu must be >= 0, got {tilt}")));
    }
    Ok(())
}

fn tilt_error(tilt: f64, at: f64, last_log: f64, last_time: f64, span: f64) -> Error {
    // growth rate seen so far, minus what the floating-point range can absorb over the span
    let rate = if last_time > 0.0 {
        last_log / last_time + tilt
    } else {
        tilt
    };
    let min_mu = (rate - 0.5 * f64::MAX.ln() / span).max(tilt);
    Error::TiltTooSmall {
        mu: tilt,
        at,
        min_mu,
    }
}

/// Solves `H'(t) = ∫_0^t H(t-u) H(u) k(t-u) du`, `H(0) = 1`, on `[0, T]`.
pub fn solve_stationary(
    kernel: &KernelSpec,
    horizon: f64,
    step: f64,
    tilt: f64,
) -> Result<StationarySolution> {
    kernel.validate()?;
    if !kernel.is_stationary() {
        return Err(Error::Usage(
            "stationary solver needs a stationary kernel; use the two-time solver".into(),
        ));
    }
    check_grid(horizon, step, tilt)?;
    let n = grid_intervals(horizon, step);
    let h = step;
    let lag: Vec<f64> = (0..=n).map(|i| kernel.lag(i as f64 * h)).collect();
    let decay = (-tilt * h).exp();
    let mut g = Vec::with_capacity(n + 1);
    let mut memory = Vec::with_capacity(n + 1);
    g.push(1.0);
    memory.push(0.0);
    if n >= 1 {
        let g1 = decay * (1.0 + 0.5 * lag[0] * h * h);
        g.push(g1);
        memory.push(0.5 * h * g1 * (lag[1] + lag[0]));
    }
    for i in 1..n {
        let mut interior = CompensatedSum::new();
        for m in 1..=i {
            interior.add(g[i + 1 - m] * g[m] * lag[i + 1 - m]);
        }
        let interior = interior.value();
        let ends = 0.5 * (lag[i + 1] + lag[0]);
        let predicted = decay * (g[i] + h * memory[i]);
        let memory_pred = h * (ends * predicted + interior);
        let next = decay * g[i] + 0.5 * h * (decay * memory[i] + memory_pred);
        if !next.is_finite() {
            let t = i as f64 * h;
            return Err(tilt_error(tilt, (i + 1) as f64 * h, g[i].ln(), t, horizon));
        }
        g.push(next);
        memory.push(h * (ends * next + interior));
    }
    Ok(StationarySolution {
        step,
        horizon,
        tilt,
        values: g,
        kernel: kernel.clone(),
    })
}

/// Solves the two-time equation for base times `t ≥ t0` and `s ≤ T`.
pub fn solve_two_time(
    kernel: &KernelSpec,
    base: f64,
    horizon: f64,
    step: f64,
    tilt: f64,
) -> Result<TwoTimeSolution> {
    kernel.validate()?;
    if !(base >= 0.0 && base.is_finite()) {
        return Err(Error::Domain(format!(
            "base time t0 must be >= 0, got {base}"
        )));
    }
    if !(horizon > base) {
        return Err(Error::Domain(format!(
            "horizon T must exceed t0, got T={horizon}, t0={base}"
        )));
    }
    check_grid(horizon - base, step, tilt)?;
    let n = grid_intervals(horizon - base, step);
    if n > TWO_TIME_BUDGET {
        return Err(Error::Resource(format!(
            "two-time grid of {n} steps exceeds the budget of {TWO_TIME_BUDGET}"
        )));
    }
    let h = step;
    let time = |i: usize| base + i as f64 * h;
    let decay = (-tilt * h).exp();

    // rows[j][i] = G[j][i]; columns[i][m - i] = G[m][i]
    let mut rows: Vec<Vec<f64>> = vec![vec![1.0]];
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    columns.push(vec![1.0]);
    let mut memory_prev: Vec<f64> = vec![0.0];
    let mut kernel_row = Vec::with_capacity(n + 1);

    for j in 0..n {
        let s = time(j + 1);
        kernel_row.clear();
        kernel_row.extend((0..=j + 1).map(|m| kernel.value(s, time(m))));
        let kr = &kernel_row;

        let mut row = vec![0.0; j + 2];
        let mut memory = vec![0.0; j + 2];
        row[j + 1] = 1.0;

        let mid = 0.5 * (time(j) + s);
        let seed = decay * (1.0 + 0.5 * h * h * kernel.value(mid, mid));
        row[j] = seed;
        memory[j] = 0.5 * h * seed * (kr[j] + kr[j + 1]);

        for i in (0..j).rev() {
            let col = &columns[i];
            let mut interior = CompensatedSum::new();
            for m in i + 1..=j {
                interior.add(row[m] * col[m - i] * kr[m]);
            }
            let interior = interior.value();
            let ends = 0.5 * (kr[i] + kr[j + 1]);
            let previous = rows[j][i];
            let predicted = decay * (previous + h * memory_prev[i]);
            let memory_pred = h * (ends * predicted + interior);
            let next = decay * previous + 0.5 * h * (decay * memory_prev[i] + memory_pred);
            if !next.is_finite() {
                let lag = (j - i) as f64 * h;
                return Err(tilt_error(
                    tilt,
                    lag + h,
                    previous.ln(),
                    lag,
                    horizon - base,
                ));
            }
            row[i] = next;
            memory[i] = h * (ends * next + interior);
        }

        for (i, &v) in row.iter().enumerate().take(j + 1) {
            columns[i].push(v);
        }
        columns.push(vec![1.0]);
        rows.push(row);
        memory_prev = memory;
    }

    Ok(TwoTimeSolution {
        base,
        step,
        horizon,
        tilt,
        rows,
        kernel: kernel.clone(),
    })
}

fn untilt(g: f64, tilt: f64, lag: f64) -> f64 {
    let h = (g.ln() + tilt * lag).exp();
    if h.is_nan() {
        f64::INFINITY
    } else {
        h
    }
}

impl StationarySolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Last grid time.
    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// `ln H(t_i)`, which stays finite even when `H` itself overflows.
    pub fn log_h(&self, i: usize) -> f64 {
        self.values[i].ln() + self.tilt * self.time(i)
    }

    /// `H(t_i)`, `+inf` on overflow.
    pub fn h_value(&self, i: usize) -> f64 {
        untilt(self.values[i], self.tilt, self.time(i))
    }

    /// Largest relative excess of `H` over `exp(2 ∫_0^t sqrt(k(u,u)) du)`
    /// on grid points `t > 0`; nonpositive for a correct solution.
    pub fn check_upper_bound(&self) -> f64 {
        let rate = 2.0 * self.kernel.lag(0.0).sqrt();
        (1..self.len())
            .map(|i| (self.log_h(i) - rate * self.time(i)).exp() - 1.0)
            .fold(
                if self.len() > 1 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                },
                f64::max,
            )
    }

    /// Writes the `# kernel=..., h=, T=, mu=` header and `t,G,H` rows.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "# kernel={}, h={}, T={}, mu={}",
            self.kernel.to_json(),
            self.step,
            self.horizon,
            self.tilt
        )?;
        writeln!(out, "t,G,H")?;
        for (i, g) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", self.time(i), g, self.h_value(i))?;
        }
        Ok(())
    }
}

/// Free-function form of [`StationarySolution::check_upper_bound`].
pub fn check_upper_bound(solution: &StationarySolution) -> f64 {
    solution.check_upper_bound()
}

impl TwoTimeSolution {
    /// Number of grid points per side.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.base + i as f64 * self.step
    }

    /// `G[j][i]` for `i ≤ j`.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.rows[j][i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    /// `ln H(s_j, t_i)`.
    pub fn log_h(&self, j: usize, i: usize) -> f64 {
        self.rows[j][i].ln() + self.tilt * (j - i) as f64 * self.step
    }

    pub fn h_value(&self, j: usize, i: usize) -> f64 {
        untilt(self.rows[j][i], self.tilt, (j - i) as f64 * self.step)
    }

    /// `ln H(t0 + lag, t0)` on the grid, i.e. the column of the base time.
    pub fn base_column_log(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.log_h(j, 0)).collect()
    }

    /// Largest relative excess of `H(s,t)` over `exp(2 ∫_t^s sqrt(k(u,u)) du)`
    /// with `s > t`; the integral uses the trapezoid rule on the grid.
    pub fn check_upper_bound(&self) -> f64 {
        let n = self.len();
        let root: Vec<f64> = (0..n)
            .map(|i| {
                let t = self.time(i);
                self.kernel.value(t, t).sqrt()
            })
            .collect();
        let mut cumulative = vec![0.0; n];
        for i in 1..n {
            cumulative[i] = cumulative[i - 1] + 0.5 * self.step * (root[i] + root[i - 1]);
        }
        let mut worst = if n > 1 { f64::NEG_INFINITY } else { 0.0 };
        for j in 1..n {
            for i in 0..j {
                let excess = (self.log_h(j, i) - 2.0 * (cumulative[j] - cumulative[i])).exp() - 1.0;
                worst = worst.max(excess);
            }
        }
        worst
    }

    /// Writes the header and `s,t,G,H` rows of the lower triangle.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "# kernel={}, t0={}, h={}, T={}, mu={}",
            self.kernel.to_json(),
            self.base,
            self.step,
            self.horizon,
            self.tilt
        )?;
        writeln!(out, "s,t,G,H")?;
        for j in 0..self.len() {
            for i in 0..=j {
                writeln!(
                    out,
                    "{},{},{},{}",
                    self.time(j),
                    self.time(i),
                    self.rows[j][i],
                    self.h_value(j, i)
                )?;
            }
        }
        Ok(())
    }
}
