//! Covariance kernel families.
//!
//! Every kernel is nonnegative and bounded, with its supremum attained on the
//! diagonal. Kernels are plain data: they serialize to the JSON objects used
//! by the command-line front end, e.g. `{"family":"exponential","c":1,"delta":0.5}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative function of one time variable sampled on a uniform grid
/// starting at zero. Values between nodes are linearly interpolated; past
/// the last node the final value is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    pub step: f64,
    pub values: Vec<f64>,
}

impl Tabulated {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        let table = Tabulated { step, values };
        table.validate()?;
        Ok(table)
    }

    /// Samples `f` at `0, step, ..., (len-1) step`.
    pub fn sample(step: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(step, (0..len).map(|i| f(i as f64 * step)).collect())
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain(format!(
                "tabulated step must be positive, got {}",
                self.step
            )));
        }
        if self.values.is_empty() {
            return Err(Error::Domain("tabulated function has no values".into()));
        }
        if let Some(bad) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!(
                "tabulated values must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, u: f64) -> f64 {
        let x = u / self.step;
        let last = self.values.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// One summand `coef · e^{-rate u} · (1+u)^{-power}` of a stationary kernel.
///
/// Every stationary family is a finite sum of such terms, which is what the
/// Laplace-transform tail integrals need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagTerm {
    pub coef: f64,
    pub rate: f64,
    pub power: f64,
}

impl LagTerm {
    pub fn eval(&self, u: f64) -> f64 {
        let mut v = self.coef;
        if self.rate != 0.0 {
            v *= (-self.rate * u).exp();
        }
        if self.power != 0.0 {
            v *= (1.0 + u).powf(-self.power);
        }
        v
    }
}

/// Covariance kernel `k(s,t)`, `s ≥ t ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `k ≡ C`.
    Constant {
        #[serde(rename = "C")]
        c: f64,
    },
    /// `k(u) = c e^{-δu}`.
    Exponential { c: f64, delta: f64 },
    /// `k(u) = c2 + c1 e^{-δu}`.
    MixedExponential { c2: f64, c1: f64, delta: f64 },
    /// `k(u) = C (1+u)^{-a}`, `a > 1`.
    PowerLaw {
        #[serde(rename = "C")]
        c: f64,
        a: f64,
    },
    /// `k(u) = c2 + c1 (1+u)^{-a}`, `a ≥ 1`.
    AlgebraicMixed { c2: f64, c1: f64, a: f64 },
    /// `k(s,t) = h(s) h(t)`.
    Separable { h: Tabulated },
    /// `k(s,t) = C (t/s)^a + k1(s-t)` for `s ≥ t`, with `k1` an optional
    /// stationary kernel.
    RatioFlat {
        #[serde(rename = "C")]
        c: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stationary_part: Option<Box<KernelSpec>>,
    },
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

fn finite_nonneg(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v >= 0.0, || {
        format!("{name} must be finite and >= 0, got {v}")
    })
}

fn finite_pos(name: &str, v: f64) -> Result<()> {
    require(v.is_finite() && v > 0.0, || {
        format!("{name} must be finite and > 0, got {v}")
    })
}

impl KernelSpec {
    /// Parses and validates a JSON kernel description.
    pub fn from_json(text: &str) -> Result<Self> {
        let kernel: KernelSpec = serde_json::from_str(text)
            .map_err(|e| Error::Usage(format!("invalid kernel JSON: {e}")))?;
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serialization cannot fail")
    }

    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Constant { c } => finite_nonneg("C", *c),
            KernelSpec::Exponential { c, delta } => {
                finite_pos("c", *c)?;
                finite_pos("delta", *delta)
            }
            KernelSpec::MixedExponential { c2, c1, delta } => {
                finite_pos("c2", *c2)?;
                finite_pos("c1", *c1)?;
                finite_pos("delta", *delta)
            }
            KernelSpec::PowerLaw { c, a } => {
                finite_nonneg("C", *c)?;
                require(a.is_finite() && *a > 1.0, || {
                    format!("power-law exponent a must be > 1, got {a}")
                })
            }
            KernelSpec::AlgebraicMixed { c2, c1, a } => {
                finite_pos("c2", *c2)?;
                finite_pos("c1", *c1)?;
                require(a.is_finite() && *a >= 1.0, || {
                    format!("algebraic exponent a must be >= 1, got {a}")
                })
            }
            KernelSpec::Separable { h } => h.validate(),
            KernelSpec::RatioFlat {
                c,
                a,
                stationary_part,
            } => {
                finite_nonneg("C", *c)?;
                finite_nonneg("a", *a)?;
                if let Some(part) = stationary_part {
                    part.validate()?;
                    require(part.is_stationary(), || {
                        "ratio_flat stationary_part must be a stationary kernel".into()
                    })?;
                }
                Ok(())
            }
        }
    }

    /// `k(s,t)` with argument checks; the arguments may come in either order.
    pub fn evaluate(&self, s: f64, t: f64) -> Result<f64> {
        if !(s >= 0.0 && t >= 0.0) {
            return Err(Error::Domain(format!(
                "kernel times must be nonnegative, got ({s}, {t})"
            )));
        }
        let (s, t) = if t > s { (t, s) } else { (s, t) };
        Ok(self.value(s, t))
    }

    /// `k(s,t)` for `s ≥ t ≥ 0`, without checks.
    pub fn value(&self, s: f64, t: f64) -> f64 {
        match self {
            KernelSpec::Separable { h } => h.eval(s) * h.eval(t),
            KernelSpec::RatioFlat {
                c,
                a,
                stationary_part,
            } => {
                let ratio = if s == t { 1.0 } else { (t / s).powf(*a) };
                let flat = if *c == 0.0 { 0.0 } else { c * ratio };
                flat + stationary_part.as_ref().map_or(0.0, |k| k.lag(s - t))
            }
            _ => self.lag(s - t),
        }
    }

    /// `k(u)` for a stationary kernel, `u ≥ 0`.
    ///
    /// Non-stationary kernels are evaluated as `k(u, 0)`.
    pub fn lag(&self, u: f64) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::Exponential { c, delta } => c * (-delta * u).exp(),
            KernelSpec::MixedExponential { c2, c1, delta } => c2 + c1 * (-delta * u).exp(),
            KernelSpec::PowerLaw { c, a } => c * (1.0 + u).powf(-a),
            KernelSpec::AlgebraicMixed { c2, c1, a } => c2 + c1 * (1.0 + u).powf(-a),
            KernelSpec::Separable { .. } | KernelSpec::RatioFlat { .. } => self.value(u, 0.0),
        }
    }

    /// `sup_s k(s,s)`, exact per family.
    pub fn diagonal_sup(&self) -> f64 {
        match self {
            KernelSpec::Constant { c } => *c,
            KernelSpec::Exponential { c, .. } => *c,
            KernelSpec::MixedExponential { c2, c1, .. } => c2 + c1,
            KernelSpec::PowerLaw { c, .. } => *c,
            KernelSpec::AlgebraicMixed { c2, c1, .. } => c2 + c1,
            KernelSpec::Separable { h } => {
                let m = h.max();
                m * m
            }
            KernelSpec::RatioFlat {
                c, stationary_part, ..
            } => c + stationary_part.as_ref().map_or(0.0, |k| k.diagonal_sup()),
        }
    }

    pub fn is_stationary(&self) -> bool {
        match self {
            KernelSpec::Separable { .. } => false,
            KernelSpec::RatioFlat { c, a, .. } => *c == 0.0 || *a == 0.0,
            _ => true,
        }
    }

    /// The default tilt `2 sqrt(sup k(s,s))`, the universal growth-rate bound.
    pub fn default_tilt(&self) -> f64 {
        2.0 * self.diagonal_sup().sqrt()
    }

    /// Decomposition `k(u) = Σ coef e^{-rate u} (1+u)^{-power}` of a
    /// stationary kernel; `None` for non-stationary kernels.
    pub fn lag_terms(&self) -> Option<Vec<LagTerm>> {
        let term = |coef: f64, rate: f64, power: f64| LagTerm { coef, rate, power };
        let terms = match self {
            KernelSpec::Constant { c } => vec![term(*c, 0.0, 0.0)],
            KernelSpec::Exponential { c, delta } => vec![term(*c, *delta, 0.0)],
            KernelSpec::MixedExponential { c2, c1, delta } => {
                vec![term(*c2, 0.0, 0.0), term(*c1, *delta, 0.0)]
            }
            KernelSpec::PowerLaw { c, a } => vec![term(*c, 0.0, *a)],
            KernelSpec::AlgebraicMixed { c2, c1, a } => {
                vec![term(*c2, 0.0, 0.0), term(*c1, 0.0, *a)]
            }
            KernelSpec::Separable { .. } => return None,
            KernelSpec::RatioFlat {
                c, stationary_part, ..
            } => {
                if !self.is_stationary() {
                    return None;
                }
                let mut terms = vec![term(*c, 0.0, 0.0)];
                if let Some(part) = stationary_part {
                    terms.extend(part.lag_terms()?);
                }
                terms
            }
        };
        Some(terms.into_iter().filter(|t| t.coef != 0.0).collect())
    }

    /// For `RatioFlat`, `sup_{t≥T, |s-t|≤M} |C (t/s)^a - C|`, which is
    /// attained at `t = T`, `s = T + M`. `None` for other families.
    pub fn flat_deviation(&self, horizon: f64, width: f64) -> Option<f64> {
        match self {
            KernelSpec::RatioFlat { c, a, .. } => {
                Some(c * (1.0 - (horizon / (horizon + width)).powf(*a)))
            }
            _ => None,
        }
    }

    /// The kernel `C + k1` that governs the first-order growth of a
    /// `RatioFlat` kernel at late times.
    pub fn flat_limit(&self) -> Option<KernelSpec> {
        match self {
            KernelSpec::RatioFlat {
                c, stationary_part, ..
            } => Some(KernelSpec::RatioFlat {
                c: *c,
                a: 0.0,
                stationary_part: stationary_part.clone(),
            }),
            _ => None,
        }
    }
}
