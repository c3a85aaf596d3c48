//! `l_p` Lewis weights: the unique `u` with `u_i = tau_i(U^{1/2 - 1/p} A)`.
//!
//! Computed by the fixed-point iteration
//! `u_i <- (a_i (A^T U^{1 - 2/p} A)^+ a_i^T)^{p/2}` started at the leverage
//! scores. The map is a contraction for `p < 4`; for larger `p` the
//! iteration is best-effort and reports its residual on failure.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Mat, OrthoFactor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LewisOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LewisOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LewisWeights {
    pub p: f64,
    pub u: Vec<f64>,
    /// Number of fixed-point updates performed.
    pub iterations: usize,
    /// `max_i |u_i - tau_i(U^{1/2-1/p} A)|` at the returned `u`.
    pub residual: f64,
}

impl LewisWeights {
    /// Weights inflated by `slack` in `[1, 2]`, modelling a 2-approximation
    /// `u <= u_hat <= 2u`.
    pub fn approximate(&self, slack: f64) -> Vec<f64> {
        self.u.iter().map(|u| slack * u).collect()
    }

    pub fn total(&self) -> f64 {
        self.u.iter().sum()
    }
}

/// `d^{max(0, p/2 - 1)}`, the dimension factor in the entry bound.
pub fn dimension_factor(d: usize, p: f64) -> f64 {
    (d as f64).powf((p / 2.0 - 1.0).max(0.0))
}

/// Leverage scores of `diag(s) A_{rows,*}` for a row subset.
pub(crate) fn scaled_leverage(a: &Mat, rows: Option<&[usize]>, scale: Option<&[f64]>) -> Vec<f64> {
    let m = rows.map_or(a.nrows(), <[usize]>::len);
    OrthoFactor::from_col_major(m, a.ncols(), a.gather_col_major(rows, scale)).row_norms_sq()
}

/// Lewis weights of `A_{rows,*}` (all rows when `rows` is `None`).
pub(crate) fn lewis_rows(
    a: &Mat,
    rows: Option<&[usize]>,
    p: f64,
    opts: LewisOptions,
) -> Result<LewisWeights> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Parameter(format!("Lewis weights need p >= 1, got {p}")));
    }
    let m = rows.map_or(a.nrows(), <[usize]>::len);
    let row_of = |k: usize| rows.map_or(k, |r| r[k]);
    let zero_row: Vec<bool> = (0..m).map(|k| a.row(row_of(k)).norm_sq() == 0.0).collect();
    if zero_row.iter().all(|&z| z) {
        return Err(Error::Parameter("Lewis weights need at least one nonzero row".into()));
    }

    let mut u = scaled_leverage(a, rows, None);
    if p == 2.0 {
        return Ok(LewisWeights {
            p,
            u,
            iterations: 1,
            residual: 0.0,
        });
    }

    let exponent = 0.5 - 1.0 / p;
    let mut scale = vec![0.0; m];
    let mut iterations = 1;
    loop {
        for k in 0..m {
            scale[k] = if zero_row[k] {
                0.0
            } else {
                u[k].max(f64::MIN_POSITIVE).powf(exponent)
            };
        }
        let tau = scaled_leverage(a, rows, Some(&scale));
        let residual = u
            .iter()
            .zip(&tau)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= opts.tol {
            return Ok(LewisWeights {
                p,
                u,
                iterations,
                residual,
            });
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual,
            });
        }
        // tau_k = s_k^2 q_k with q_k = a_k (A^T U^{1-2/p} A)^+ a_k^T; update u_k = q_k^{p/2}
        for k in 0..m {
            u[k] = if zero_row[k] {
                0.0
            } else {
                (tau[k] / (scale[k] * scale[k])).powf(p / 2.0)
            };
        }
        iterations += 1;
    }
}

/// `l_p` Lewis weights of `A`.
pub fn lewis_weights(a: &Mat, p: f64, opts: LewisOptions) -> Result<LewisWeights> {
    lewis_rows(a, None, p, opts)
}

/// Fixed-point defect `max_i |u_i - tau_i(U^{1/2-1/p} A)|` of arbitrary weights.
pub fn fixed_point_residual(a: &Mat, u: &[f64], p: f64) -> Result<f64> {
    if u.len() != a.nrows() {
        return Err(Error::Shape(format!("{} weights for {} rows", u.len(), a.nrows())));
    }
    let exponent = 0.5 - 1.0 / p;
    let scale: Vec<f64> = u
        .iter()
        .map(|&v| if v > 0.0 { v.powf(exponent) } else { 0.0 })
        .collect();
    let tau = scaled_leverage(a, None, Some(&scale));
    Ok(u.iter().zip(&tau).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryBoundReport {
    /// Largest `|y_i|^p / (d^{max(0,p/2-1)} u_i ||y||_p^p)` seen.
    pub max_ratio: f64,
    /// Coordinates whose ratio exceeded the slack factor.
    pub violations: usize,
    pub checked: usize,
}

/// Monte Carlo check of `|y_i|^p <= d^{max(0,p/2-1)} u_i ||y||_p^p` over
/// random `y = A x` with Gaussian `x`.
pub fn entry_bound_check(
    a: &Mat,
    u: &[f64],
    p: f64,
    trials: usize,
    seed: u64,
    slack: f64,
) -> Result<EntryBoundReport> {
    if u.len() != a.nrows() {
        return Err(Error::Shape(format!("{} weights for {} rows", u.len(), a.nrows())));
    }
    let factor = dimension_factor(a.ncols(), p);
    let mut rng = crate::rng::rng_from(seed, &[crate::rng::tag("entry-bound")]);
    let mut report = EntryBoundReport {
        max_ratio: 0.0,
        violations: 0,
        checked: 0,
    };
    for _ in 0..trials {
        let x: Vec<f64> = (0..a.ncols()).map(|_| rng.sample(StandardNormal)).collect();
        let y = a.mul_vec(&x)?;
        let total: f64 = y.iter().map(|v| v.abs().powf(p)).sum();
        if total == 0.0 {
            continue;
        }
        for (yi, ui) in y.iter().zip(u) {
            let lhs = yi.abs().powf(p);
            if lhs == 0.0 {
                continue;
            }
            let ratio = lhs / (factor * ui * total);
            report.checked += 1;
            report.max_ratio = report.max_ratio.max(ratio);
            if ratio > slack {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}
