//! Small numerical building blocks shared by the solvers.

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `tol` (or can no longer shrink).
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    hint: &str,
) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::Bracketing {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
            hint: hint.to_string(),
        });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.is_nan() {
            return Err(Error::Internal(format!(
                "bisection hit NaN at {m} ({hint})"
            )));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub const ZERO: Self = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    pub fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DoubleDouble { hi, lo }
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul_f64(q1).neg());
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul_f64(q2).neg());
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }.add(DoubleDouble::from_f64(q3))
    }
}

/// `∫_0^∞ f(x) dx` by exp-sinh (double exponential) quadrature.
///
/// Suited to integrands that are smooth on `(0, ∞)` and decay either
/// algebraically or exponentially. Halves the step until two successive
/// levels agree to `rel_tol`.
pub fn integrate_half_line(f: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    // Nodes beyond |t| = 4.5 sit at x < e^-70 or x > e^70.
    let t_max = 4.5;
    let node = |t: f64| {
        let x = (half_pi * t.sinh()).exp();
        let w = half_pi * t.cosh() * x;
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut step = 0.5;
    let n0 = (t_max / step) as i64;
    let mut sum = compensated_sum((-n0..=n0).map(|k| node(k as f64 * step)));
    let mut estimate = sum * step;
    for _ in 0..8 {
        step *= 0.5;
        let n = (t_max / step) as i64;
        let fresh = compensated_sum(
            (-n..=n)
                .filter(|k| k % 2 != 0)
                .map(|k| node(k as f64 * step)),
        );
        sum += fresh;
        let next = sum * step;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `∫_a^b f(x) dx` by tanh-sinh quadrature, tolerating integrable endpoint
/// singularities. Refines by step halving until `rel_tol` is met.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let t_max = 3.5;
    let node = |t: f64| {
        let u = half_pi * t.sinh();
        let cu = u.cosh();
        // distance from the nearer endpoint, computed without cancellation
        let gap = r / (cu * cu) / (1.0 + u.abs().tanh());
        let x = if t < 0.0 { a + gap } else { b - gap };
        let w = r * half_pi * t.cosh() / (cu * cu);
        if gap <= 0.0 {
            return 0.0;
        }
        let v = f(if t == 0.0 { c } else { x }) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut step = 0.5;
    let n0 = (t_max / step) as i64;
    let mut sum = compensated_sum((-n0..=n0).map(|k| node(k as f64 * step)));
    let mut estimate = sum * step;
    for _ in 0..9 {
        step *= 0.5;
        let n = (t_max / step) as i64;
        let fresh = compensated_sum(
            (-n..=n)
                .filter(|k| k % 2 != 0)
                .map(|k| node(k as f64 * step)),
        );
        sum += fresh;
        let next = sum * step;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Uniform grid `0, h, ..., n h` covering `[0, horizon]`; returns `n`.
pub fn grid_intervals(horizon: f64, step: f64) -> usize {
    (horizon / step + 1e-9).floor() as usize
}
