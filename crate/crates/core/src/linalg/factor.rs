use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::Mat;
use crate::error::{Error, Result};

/// Relative threshold on `|R_kk| / |R_00|` below which a pivot counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting, `A P = Q R`, truncated at the numerical rank.
///
/// Householder vectors are stored below the diagonal of a column-major work
/// array (their leading entries separately), `R` on and above it.
#[derive(Debug, Clone)]
pub struct OrthoFactor {
    m: usize,
    d: usize,
    rank: usize,
    steps: usize,
    work: Vec<f64>,
    v0: Vec<f64>,
    coef: Vec<f64>,
    perm: Vec<usize>,
}

impl OrthoFactor {
    /// Factors an `m x d` column-major array.
    pub(crate) fn from_col_major(m: usize, d: usize, mut a: Vec<f64>) -> Self {
        debug_assert_eq!(a.len(), m * d);
        let steps = m.min(d);
        let mut perm: Vec<usize> = (0..d).collect();
        let mut v0 = vec![0.0; steps];
        let mut coef = vec![0.0; steps];
        let mut norms: Vec<f64> = (0..d)
            .map(|j| a[j * m..(j + 1) * m].iter().map(|v| v * v).sum())
            .collect();
        let mut reference = norms.clone();

        for k in 0..steps {
            let p = (k..d)
                .max_by(|&i, &j| norms[i].total_cmp(&norms[j]).then(j.cmp(&i)))
                .unwrap_or(k);
            if p != k {
                for i in 0..m {
                    a.swap(k * m + i, p * m + i);
                }
                perm.swap(k, p);
                norms.swap(k, p);
                reference.swap(k, p);
            }

            let (head, tail) = a.split_at_mut((k + 1) * m);
            let col = &mut head[k * m + k..(k + 1) * m];
            let x0 = col[0];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                // remaining block is zero; identity reflector
                continue;
            }
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            let first = x0 - alpha;
            let vtv = first * first + (norm * norm - x0 * x0);
            let c = 2.0 / vtv;
            v0[k] = first;
            coef[k] = c;
            col[0] = alpha;
            let v = &col[1..];

            for j in (k + 1)..d {
                let cj = &mut tail[(j - k - 1) * m + k..(j - k) * m];
                let dot = first * cj[0] + v.iter().zip(&cj[1..]).map(|(a, b)| a * b).sum::<f64>();
                let s = c * dot;
                cj[0] -= s * first;
                cj[1..].iter_mut().zip(v).for_each(|(t, vi)| *t -= s * vi);
                norms[j] -= cj[0] * cj[0];
                if norms[j] <= 1e-10 * reference[j] {
                    norms[j] = cj[1..].iter().map(|t| t * t).sum();
                    reference[j] = norms[j];
                }
            }
        }

        let r00 = if steps > 0 { a[0].abs() } else { 0.0 };
        let rank = if r00 == 0.0 {
            0
        } else {
            (0..steps)
                .find(|&k| a[k * m + k].abs() <= RANK_TOL * r00)
                .unwrap_or(steps)
        };

        Self {
            m,
            d,
            rank,
            steps,
            work: a,
            v0,
            coef,
            perm,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    fn apply_reflector(&self, k: usize, y: &mut [f64]) {
        let c = self.coef[k];
        if c == 0.0 {
            return;
        }
        let m = self.m;
        let v = &self.work[k * m + k + 1..(k + 1) * m];
        let first = self.v0[k];
        let tail = &mut y[k..];
        let dot = first * tail[0] + v.iter().zip(&tail[1..]).map(|(a, b)| a * b).sum::<f64>();
        let s = c * dot;
        tail[0] -= s * first;
        tail[1..].iter_mut().zip(v).for_each(|(t, vi)| *t -= s * vi);
    }

    /// `Q^T y` (all `m` entries; the first `rank` are the range coordinates).
    pub fn qt_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = y.to_vec();
        for k in 0..self.steps {
            self.apply_reflector(k, &mut out);
        }
        out
    }

    /// Thin orthonormal factor, `m x rank`, column-major.
    fn q_col_major(&self) -> Vec<f64> {
        let (m, r) = (self.m, self.rank);
        let mut q = vec![0.0; m * r];
        for j in 0..r {
            let col = &mut q[j * m..(j + 1) * m];
            col[j] = 1.0;
            for k in (0..=j.min(self.steps.saturating_sub(1))).rev() {
                self.apply_reflector(k, col);
            }
        }
        q
    }

    /// The thin orthonormal factor `Q` (`m x rank`).
    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m, self.rank, &self.q_col_major())
    }

    /// `R` (`rank x d`) in the original column order, so that `A = Q R`.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        let mut r = DMatrix::zeros(self.rank, self.d);
        for k in 0..self.rank {
            for j in k..self.d {
                r[(k, self.perm[j])] = self.work[j * self.m + k];
            }
        }
        r
    }

    /// `||e_i^T Q||^2` for every row.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        let q = self.q_col_major();
        let m = self.m;
        let mut out = vec![0.0; m];
        for j in 0..self.rank {
            for (o, v) in out.iter_mut().zip(&q[j * m..(j + 1) * m]) {
                *o += v * v;
            }
        }
        out
    }

    /// Minimum-norm minimizer of `||A x - c||_2`.
    pub fn solve_least_squares(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.m {
            return Err(Error::Shape(format!(
                "right-hand side has {} entries, expected {}",
                c.len(),
                self.m
            )));
        }
        let (m, d, r) = (self.m, self.d, self.rank);
        let y = self.qt_mul(c);
        let mut z = vec![0.0; d];
        if r == d {
            for k in (0..r).rev() {
                let mut s = y[k];
                for j in (k + 1)..r {
                    s -= self.work[j * m + k] * z[j];
                }
                z[k] = s / self.work[k * m + k];
            }
        } else if r > 0 {
            // trapezoidal R has full row rank; its pseudo-inverse gives the min-norm point
            let rt = DMatrix::from_fn(r, d, |k, j| if j >= k { self.work[j * m + k] } else { 0.0 });
            let svd = rt.svd(true, true);
            let sol = svd
                .solve(&DVector::from_column_slice(&y[..r]), 0.0)
                .map_err(|e| Error::Domain(format!("pseudo-inverse failed: {e}")))?;
            z.copy_from_slice(sol.as_slice());
        }
        let mut x = vec![0.0; d];
        for (j, &pj) in self.perm.iter().enumerate() {
            x[pj] = z[j];
        }
        Ok(x)
    }
}

/// Rank-revealing thin factorization of `A`.
pub fn thin_factorize(a: &Mat) -> Result<OrthoFactor> {
    Ok(OrthoFactor::from_col_major(
        a.nrows(),
        a.ncols(),
        a.gather_col_major(None, None),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeverageMode {
    /// Scores from an orthonormal basis of the column span of `A`.
    Exact,
    /// Scores of `A R^+` where `R` comes from a factorization of a sparse
    /// sign-hash sketch `S A` with `rows` rows (default `max(8 d^2, 64)`).
    /// Within a factor 2 of the exact scores with good probability.
    Sketched { rows: Option<usize>, seed: u64 },
}

/// Statistical leverage scores `tau_i(A) = a_i (A^T A)^+ a_i^T`.
pub fn leverage_scores(a: &Mat) -> Result<Vec<f64>> {
    leverage_scores_with(a, LeverageMode::Exact)
}

pub fn leverage_scores_with(a: &Mat, mode: LeverageMode) -> Result<Vec<f64>> {
    match mode {
        LeverageMode::Exact => Ok(thin_factorize(a)?.row_norms_sq()),
        LeverageMode::Sketched { rows, seed } => sketched_leverage(a, rows, seed),
    }
}

fn sketched_leverage(a: &Mat, rows: Option<usize>, seed: u64) -> Result<Vec<f64>> {
    let (n, d) = (a.nrows(), a.ncols());
    let k = rows.unwrap_or((8 * d * d).max(64));
    if k == 0 {
        return Err(Error::Parameter("sketch needs at least one row".into()));
    }
    if k >= n {
        return leverage_scores(a);
    }
    let mut rng = crate::rng::rng_from(seed, &[crate::rng::tag("leverage-sketch")]);
    let mut sa = vec![0.0; k * d];
    for i in 0..n {
        let bucket = rng.random_range(0..k);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        a.row(i).for_each(|j, v| sa[j * k + bucket] += sign * v);
    }
    let f = OrthoFactor::from_col_major(k, d, sa);
    let r = f.rank();
    if r == 0 {
        return Ok(vec![0.0; n]);
    }
    let pinv = f
        .r_matrix()
        .pseudo_inverse(0.0)
        .map_err(|e| Error::Domain(format!("pseudo-inverse failed: {e}")))?;
    let mut scores = Vec::with_capacity(n);
    let mut row = vec![0.0; r];
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = 0.0);
        a.row(i).for_each(|j, v| {
            for (t, o) in row.iter_mut().enumerate() {
                *o += v * pinv[(j, t)];
            }
        });
        scores.push(row.iter().map(|v| v * v).sum::<f64>().min(1.0));
    }
    Ok(scores)
}

/// Minimum-norm minimizer of `sum_i omega_i (a_i x - c_i)^2`.
pub fn weighted_least_squares(a: &Mat, c: &[f64], omega: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if c.len() != n || omega.len() != n {
        return Err(Error::Shape(format!(
            "{} rows but {} targets and {} weights",
            n,
            c.len(),
            omega.len()
        )));
    }
    if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Domain(format!("weights must be finite and nonnegative, found {w}")));
    }
    if let Some(v) = c.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("targets must be finite, found {v}")));
    }
    wls(a, c, omega)
}

/// Unvalidated weighted solve; rows with zero weight are skipped.
pub(crate) fn wls(a: &Mat, c: &[f64], omega: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..a.nrows()).filter(|&i| omega[i] > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::DegenerateWeights("all least-squares weights are zero".into()));
    }
    let scale: Vec<f64> = rows.iter().map(|&i| omega[i].sqrt()).collect();
    let rhs: Vec<f64> = rows.iter().zip(&scale).map(|(&i, s)| s * c[i]).collect();
    let f = OrthoFactor::from_col_major(rows.len(), a.ncols(), a.gather_col_major(Some(&rows), Some(&scale)));
    f.solve_least_squares(&rhs)
}
