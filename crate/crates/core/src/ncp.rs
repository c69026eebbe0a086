//! Non-crossing pair partitions, the Wick formula for semicircular
//! processes, and truncated series for `H(s,t)`.
//!
//! The `n`-th series term is the integral of the Wick moment over the
//! ordered simplex `t ≤ t_1 ≤ ... ≤ t_{2n} ≤ s`. Orders 1 and 2 are computed
//! by iterated trapezoid quadrature with Richardson extrapolation, higher
//! orders by Monte Carlo over sorted uniform samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Largest order [`enumerate_ncp`] will produce.
pub const MAX_ENUMERATION_ORDER: usize = 8;
/// Largest order [`series_term`] will integrate.
pub const MAX_SERIES_ORDER: usize = 6;

const CHUNK: u64 = 8192;

/// A fixed-point-free, non-crossing involution of `{1, ..., 2n}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pairing {
    /// `partner[i]` is the 0-based partner of position `i`.
    partner: Vec<usize>,
}

impl Pairing {
    /// Builds a pairing from 1-based partners `σ(1), ..., σ(2n)`, checking
    /// the involution and non-crossing conditions.
    pub fn from_sigma(sigma: &[usize]) -> Result<Self> {
        let partner: Vec<usize> = sigma.iter().map(|&p| p.wrapping_sub(1)).collect();
        let pairing = Pairing { partner };
        if !pairing.is_involution() || !pairing.is_non_crossing() {
            return Err(Error::Domain(format!(
                "{sigma:?} is not a non-crossing pairing"
            )));
        }
        Ok(pairing)
    }

    pub fn order(&self) -> usize {
        self.partner.len() / 2
    }

    /// `σ(i)` with 1-based positions.
    pub fn sigma(&self, i: usize) -> usize {
        self.partner[i - 1] + 1
    }

    /// The 1-based pairs `(i, σ(i))` with `i < σ(i)`, ordered by `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter(|(i, p)| i < p)
            .map(|(i, &p)| (i + 1, p + 1))
            .collect()
    }

    pub fn is_involution(&self) -> bool {
        let len = self.partner.len();
        len.is_multiple_of(2)
            && self
                .partner
                .iter()
                .enumerate()
                .all(|(i, &p)| p < len && p != i && self.partner[p] == i)
    }

    /// No `i < j < σ(i) < σ(j)`.
    pub fn is_non_crossing(&self) -> bool {
        let pairs: Vec<(usize, usize)> = self
            .partner
            .iter()
            .enumerate()
            .filter(|(i, p)| i < p)
            .map(|(i, &p)| (i, p))
            .collect();
        pairs
            .iter()
            .all(|&(i, pi)| pairs.iter().all(|&(j, pj)| !(i < j && j < pi && pi < pj)))
    }
}

fn block_pairings(len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in (1..len).step_by(2) {
        let inner = block_pairings(p - 1);
        let outer = block_pairings(len - p - 1);
        for a in &inner {
            for b in &outer {
                let mut map = vec![0; len];
                map[0] = p;
                map[p] = 0;
                for (x, &y) in a.iter().enumerate() {
                    map[1 + x] = 1 + y;
                }
                for (x, &y) in b.iter().enumerate() {
                    map[p + 1 + x] = p + 1 + y;
                }
                out.push(map);
            }
        }
    }
    out
}

/// All non-crossing pairings of `{1, ..., 2n}`, lexicographic in
/// `(σ(1), σ(2), ...)`.
pub fn enumerate_ncp(n: usize) -> Result<Vec<Pairing>> {
    if n > MAX_ENUMERATION_ORDER {
        return Err(Error::Resource(format!(
            "pairing enumeration is capped at order {MAX_ENUMERATION_ORDER}, got {n}"
        )));
    }
    Ok(block_pairings(2 * n)
        .into_iter()
        .map(|partner| Pairing { partner })
        .collect())
}

/// Largest order accepted by [`catalan`].
pub const MAX_CATALAN_ORDER: u64 = 34;

/// Catalan number `(2n)! / (n!(n+1)!)`, exact, for `n ≤ 34`.
///
/// The recurrence `C_n = C_{n-1} 2(2n-1)/(n+1)` runs in 128-bit arithmetic.
/// Orders from 35 on are refused; `C_35` and `C_36` would still fit in 64
/// bits, `C_37` would not.
pub fn catalan(n: u64) -> Result<u64> {
    if n > MAX_CATALAN_ORDER {
        return Err(Error::Resource(format!(
            "Catalan number C_{n} is above the supported order {MAX_CATALAN_ORDER}"
        )));
    }
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * 2 * (2 * k - 1) / (k + 1);
    }
    u64::try_from(c).map_err(|_| Error::Internal(format!("C_{n} overflowed")))
}

fn pair_lists(n: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    Ok(enumerate_ncp(n)?
        .iter()
        .map(|p| p.pairs().into_iter().map(|(i, j)| (i - 1, j - 1)).collect())
        .collect())
}

fn wick_sum(pairs: &[Vec<(usize, usize)>], times: &[f64], kernel: &KernelSpec) -> f64 {
    pairs
        .iter()
        .map(|pairing| {
            pairing
                .iter()
                .map(|&(i, j)| kernel.value(times[j], times[i]))
                .product::<f64>()
        })
        .sum()
}

/// `Σ_σ Π_{i<σ(i)} k(t_i, t_σ(i))` over non-crossing pairings, for sorted
/// times. Odd moments vanish.
pub fn wick_moment(times: &[f64], kernel: &KernelSpec) -> Result<f64> {
    if times.len() % 2 == 1 {
        return Ok(0.0);
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain(
            "Wick moment needs nonnegative times in ascending order".into(),
        ));
    }
    let pairs = pair_lists(times.len() / 2)?;
    Ok(wick_sum(&pairs, times, kernel))
}

/// Quadrature settings for [`series_term`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    /// Subintervals of the coarse trapezoid grid (the fine grid doubles it).
    pub grid: usize,
    /// Monte Carlo sample count for orders 3 and above.
    pub samples: u64,
    pub seed: u64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            grid: 1000,
            samples: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermMethod {
    Exact,
    Trapezoid { grid: usize, richardson_gap: f64 },
    MonteCarlo { samples: u64, seed: u64 },
}

/// One series term with its quadrature error information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub order: usize,
    pub value: f64,
    /// Monte Carlo standard error; zero for deterministic quadrature.
    pub stderr: f64,
    pub method: TermMethod,
}

/// Truncated series `Σ_{n ≤ n_max} B_n(s,t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesApprox {
    pub n_max: usize,
    pub terms: Vec<SeriesTerm>,
    pub total: f64,
    /// Combined standard error of the Monte Carlo terms.
    pub stderr: f64,
    /// `Σ_{n > n_max} (2 sqrt(C)(s-t))^{2n} / (2n)!` with `C = sup k(u,u)`.
    pub tail_bound: f64,
}

/// Iterated trapezoid value of the order-1 or order-2 term on `m` subintervals.
fn trapezoid_term(kernel: &KernelSpec, t: f64, s: f64, n: usize, m: usize) -> f64 {
    let dx = (s - t) / m as f64;
    let x = |i: usize| t + i as f64 * dx;
    let half = 0.5 * dx;
    // Rolling tables, row j refers to upper variable x_j:
    //   inner[i] = ∫_{x_i}^{x_j} k(x_j, x) dx
    //   double[i] = ∫∫_{x_i ≤ u ≤ v ≤ x_j} k(v, u)
    let mut k_prev: Vec<f64> = vec![kernel.value(x(0), x(0))];
    let mut inner_prev = vec![0.0];
    let mut double_prev = vec![0.0];
    // running outer integrals
    let mut first = 0.0; // ∫ inner(0, y) dy, the order-1 term so far
    let mut nested_prev = 0.0; // R(j-1) = ∫ k(x_{j-1}, u) double(u, x_{j-1}) du
    let mut nested = 0.0; // ∫ R
    let mut cum_inner = vec![0.0]; // ∫_{x_0}^{x_i} inner(0, y) dy
    let mut tail = vec![0.0]; // ∫_{x_i}^{x_j} k(y, x_i) dy, completed at j = m

    for j in 1..=m {
        let xj = x(j);
        let k_row: Vec<f64> = (0..=j).map(|i| kernel.value(xj, x(i))).collect();
        let mut inner = vec![0.0; j + 1];
        for i in (0..j).rev() {
            inner[i] = inner[i + 1] + half * (k_row[i] + k_row[i + 1]);
        }
        first += half * (inner_prev[0] + inner[0]);
        if n == 1 {
            inner_prev = inner;
            continue;
        }
        let mut double = vec![0.0; j + 1];
        for i in 0..j {
            double[i] = double_prev.get(i).copied().unwrap_or(0.0)
                + half * (inner_prev.get(i).copied().unwrap_or(0.0) + inner[i]);
        }
        let mut r = 0.0;
        for i in 0..=j {
            let w = if i == 0 || i == j { half } else { dx };
            r += w * k_row[i] * double[i];
        }
        nested += half * (nested_prev + r);
        nested_prev = r;
        cum_inner.push(first);
        for i in 0..j {
            tail[i] += half * (k_prev[i] + k_row[i]);
        }
        tail.push(0.0);
        k_prev = k_row;
        inner_prev = inner;
        double_prev = double;
    }
    if n == 1 {
        return first;
    }
    // pairing {(1,2),(3,4)}: ∫ tail(t_3) ∫_{t ≤ t_2 ≤ t_3} inner(0, t_2)
    let mut split = 0.0;
    for i in 0..=m {
        let w = if i == 0 || i == m { half } else { dx };
        split += w * tail[i] * cum_inner[i];
    }
    split + nested
}

fn unit_interval_sample(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0.0 {
            return o;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
        }
    }
}

fn monte_carlo_term(
    kernel: &KernelSpec,
    t: f64,
    s: f64,
    n: usize,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    if quad.samples < 2 {
        return Err(Error::Usage("Monte Carlo needs at least 2 samples".into()));
    }
    let pairs = pair_lists(n)?;
    let width = s - t;
    let chunks = quad.samples.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(quad.seed);
            rng.set_stream(((n as u64) << 48) | c);
            let count = CHUNK.min(quad.samples - c * CHUNK);
            let mut times = vec![0.0; 2 * n];
            let mut acc = Moments::default();
            for _ in 0..count {
                for v in times.iter_mut() {
                    *v = t + width * unit_interval_sample(&mut rng);
                }
                times.sort_by(f64::total_cmp);
                acc.push(wick_sum(&pairs, &times, kernel));
            }
            acc
        })
        .collect();
    let total = partial.into_iter().fold(Moments::default(), Moments::merge);
    let mut volume = 1.0;
    for k in 1..=2 * n {
        volume *= width / k as f64;
    }
    let variance = total.m2 / (total.count - 1.0);
    Ok((
        total.mean * volume,
        (variance / total.count).sqrt() * volume,
    ))
}

/// `B_n(s,t)`, the ordered-simplex integral of the order-`n` Wick moment.
pub fn series_term(
    kernel: &KernelSpec,
    t: f64,
    s: f64,
    n: usize,
    quad: &Quadrature,
) -> Result<SeriesTerm> {
    if n > MAX_SERIES_ORDER {
        return Err(Error::Resource(format!(
            "series terms are capped at order {MAX_SERIES_ORDER}, got {n}"
        )));
    }
    if !(t >= 0.0 && s >= t && s.is_finite()) {
        return Err(Error::Domain(format!(
            "series needs 0 <= t <= s, got t={t}, s={s}"
        )));
    }
    kernel.validate()?;
    if n == 0 || s == t {
        let value = if n == 0 { 1.0 } else { 0.0 };
        return Ok(SeriesTerm {
            order: n,
            value,
            stderr: 0.0,
            method: TermMethod::Exact,
        });
    }
    if n <= 2 {
        if quad.grid < 2 {
            return Err(Error::Usage(
                "trapezoid grid needs at least 2 intervals".into(),
            ));
        }
        let coarse = trapezoid_term(kernel, t, s, n, quad.grid);
        let fine = trapezoid_term(kernel, t, s, n, 2 * quad.grid);
        let value = (4.0 * fine - coarse) / 3.0;
        return Ok(SeriesTerm {
            order: n,
            value,
            stderr: 0.0,
            method: TermMethod::Trapezoid {
                grid: quad.grid,
                richardson_gap: (fine - coarse).abs() / 3.0,
            },
        });
    }
    let (value, stderr) = monte_carlo_term(kernel, t, s, n, quad)?;
    Ok(SeriesTerm {
        order: n,
        value,
        stderr,
        method: TermMethod::MonteCarlo {
            samples: quad.samples,
            seed: quad.seed,
        },
    })
}

/// `Σ_{n > n_max} x^{2n} / (2n)!`.
fn even_exponential_tail(x: f64, n_max: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=2 * (n_max + 1) {
        term *= x / k as f64;
    }
    let mut sum = 0.0;
    let mut n = n_max + 1;
    loop {
        sum += term;
        let k = 2 * n;
        term *= x * x / ((k + 1) * (k + 2)) as f64;
        n += 1;
        if term <= 1e-17 * sum || term == 0.0 {
            return sum;
        }
    }
}

/// `Σ_{n ≤ n_max} B_n(s,t)` with the analytic remainder bound.
pub fn series_partial_sum(
    kernel: &KernelSpec,
    t: f64,
    s: f64,
    n_max: usize,
    quad: &Quadrature,
) -> Result<SeriesApprox> {
    let terms = (0..=n_max)
        .map(|n| series_term(kernel, t, s, n, quad))
        .collect::<Result<Vec<_>>>()?;
    let total = terms.iter().map(|b| b.value).sum();
    let stderr = terms
        .iter()
        .map(|b| b.stderr * b.stderr)
        .sum::<f64>()
        .sqrt();
    let x = 2.0 * kernel.diagonal_sup().sqrt() * (s - t);
    Ok(SeriesApprox {
        n_max,
        terms,
        total,
        stderr,
        tail_bound: even_exponential_tail(x, n_max),
    })
}
