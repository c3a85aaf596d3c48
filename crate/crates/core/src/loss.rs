//! Loss functions that grow like `|a|^p` below a threshold `tau` and are flat
//! beyond it, and the weighted M-norm `||y||_{M,w} = sum_i w_i M(y_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// `s * tau^2/6 * (1 - (1 - (a/tau)^2)^3)` inside the threshold, `s * tau^2/6` outside.
    TukeyBisquare,
    /// `s * min(|a|^p, tau^p)`.
    ClippedPower,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tukey" | "bisquare" | "tukey-bisquare" => Ok(LossKind::TukeyBisquare),
            "clipped" | "clipped-power" => Ok(LossKind::ClippedPower),
            other => Err(Error::Parameter(format!(
                "unknown loss kind {other:?} (expected tukey or clipped)"
            ))),
        }
    }
}

/// A validated loss. The bisquare always has growth exponent 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    kind: LossKind,
    tau: f64,
    p: f64,
    scale: f64,
}

/// Measured constants `lower <= M(a)/|a|^p <= upper` on `(0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBounds {
    pub lower: f64,
    pub upper: f64,
}

impl GrowthBounds {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

const BOUND_GRID: usize = 10_000;

impl LossSpec {
    pub fn new(kind: LossKind, tau: f64, p: f64, scale: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
        }
        if kind == LossKind::TukeyBisquare && p != 2.0 {
            return Err(Error::Parameter(format!(
                "the bisquare loss has growth exponent 2, got p = {p}"
            )));
        }
        Ok(Self { kind, tau, p, scale })
    }

    pub fn tukey(tau: f64) -> Result<Self> {
        Self::new(LossKind::TukeyBisquare, tau, 2.0, 1.0)
    }

    pub fn clipped(tau: f64, p: f64) -> Result<Self> {
        Self::new(LossKind::ClippedPower, tau, p, 1.0)
    }

    pub fn with_scale(self, scale: f64) -> Result<Self> {
        Self::new(self.kind, self.tau, self.p, scale)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The constant value taken for `|a| >= tau`.
    pub fn flat_value(&self) -> f64 {
        match self.kind {
            LossKind::TukeyBisquare => self.scale * self.tau * self.tau / 6.0,
            LossKind::ClippedPower => self.scale * self.tau.powf(self.p),
        }
    }

    /// `M(a)`, rejecting non-finite input.
    pub fn eval(&self, a: f64) -> Result<f64> {
        check_finite(a, "loss argument")?;
        Ok(self.value(a))
    }

    /// `M(a)` without the finiteness check, for inner loops over validated data.
    #[inline]
    pub fn value(&self, a: f64) -> f64 {
        let x = a.abs();
        if x >= self.tau {
            return self.flat_value();
        }
        match self.kind {
            LossKind::TukeyBisquare => {
                let t = x / self.tau;
                let c = 1.0 - t * t;
                self.scale * self.tau * self.tau / 6.0 * (1.0 - c * c * c)
            }
            LossKind::ClippedPower => {
                if self.p == 2.0 {
                    self.scale * x * x
                } else if self.p == 1.0 {
                    self.scale * x
                } else {
                    self.scale * x.powf(self.p)
                }
            }
        }
    }

    /// `M'(r) / (2r)`, extended continuously at `r = 0`. Zero in the flat region.
    ///
    /// For clipped powers with `p < 2` the weight diverges at the origin, so
    /// `|r|` is floored at `1e-12`.
    pub fn irls_weight(&self, r: f64) -> Result<f64> {
        check_finite(r, "residual")?;
        Ok(self.weight(r))
    }

    #[inline]
    pub(crate) fn weight(&self, r: f64) -> f64 {
        let x = r.abs();
        match self.kind {
            LossKind::TukeyBisquare => {
                if x >= self.tau {
                    0.0
                } else {
                    let t = x / self.tau;
                    let c = 1.0 - t * t;
                    0.5 * self.scale * c * c
                }
            }
            LossKind::ClippedPower => {
                if x > self.tau {
                    0.0
                } else if self.p == 2.0 {
                    self.scale
                } else {
                    0.5 * self.scale * self.p * x.max(1e-12).powf(self.p - 2.0)
                }
            }
        }
    }

    /// `sum_i w_i M(y_i)` with `w_i = 1` when `w` is absent.
    pub fn m_norm(&self, y: &[f64], w: Option<&[f64]>) -> Result<f64> {
        match w {
            None => y.iter().try_fold(0.0, |acc, &v| Ok(acc + self.eval(v)?)),
            Some(w) => {
                if w.len() != y.len() {
                    return Err(Error::Shape(format!(
                        "weight length {} does not match vector length {}",
                        w.len(),
                        y.len()
                    )));
                }
                let mut total = 0.0;
                for (&v, &wi) in y.iter().zip(w) {
                    if !(wi >= 0.0 && wi.is_finite()) {
                        return Err(Error::Domain(format!("weights must be nonnegative, got {wi}")));
                    }
                    if wi > 0.0 {
                        total += wi * self.eval(v)?;
                    }
                }
                Ok(total)
            }
        }
    }

    /// Unchecked weighted sum for hot loops.
    #[inline]
    pub(crate) fn weighted_sum(&self, y: &[f64], w: Option<&[f64]>) -> f64 {
        match w {
            None => y.iter().map(|&v| self.value(v)).sum(),
            Some(w) => y
                .iter()
                .zip(w)
                .filter(|(_, &wi)| wi > 0.0)
                .map(|(&v, &wi)| wi * self.value(v))
                .sum(),
        }
    }

    /// Splits indices into the heavy set `{i : |y_i| > tau}` and its complement.
    /// The boundary `|y_i| = tau` is light.
    pub fn heavy_light_split(&self, y: &[f64]) -> (Vec<usize>, Vec<usize>) {
        (0..y.len()).partition(|&i| y[i].abs() > self.tau)
    }

    /// Measures `min` and `max` of `M(a)/|a|^p` on a uniform grid of `(0, tau]`.
    pub fn growth_bounds(&self) -> GrowthBounds {
        let (mut lower, mut upper) = (f64::INFINITY, 0.0_f64);
        for k in 1..=BOUND_GRID {
            let a = self.tau * k as f64 / BOUND_GRID as f64;
            let r = self.value(a) / a.powf(self.p);
            lower = lower.min(r);
            upper = upper.max(r);
        }
        GrowthBounds { lower, upper }
    }
}
