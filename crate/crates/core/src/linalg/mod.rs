//! Dense and row-compressed matrices, the rank-revealing orthogonal factorization
//! behind least squares, and statistical leverage scores.

mod factor;

pub(crate) use factor::wls;

pub use factor::{
    leverage_scores, leverage_scores_with, thin_factorize, weighted_least_squares, LeverageMode,
    OrthoFactor, RANK_TOL,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Row-major values.
    Dense(Vec<f64>),
    Csr {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// An `n x d` real matrix stored densely (row-major) or row-compressed.
///
/// Matrices are immutable once built. Zero-row matrices are allowed so that
/// empty reductions have a representation; every other shape needs `d >= 1`
/// unless `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    storage: Storage,
}

/// One row of a [`Mat`].
#[derive(Debug, Clone, Copy)]
pub enum RowView<'a> {
    Dense(&'a [f64]),
    Sparse { cols: &'a [usize], vals: &'a [f64] },
}

impl<'a> RowView<'a> {
    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        match *self {
            RowView::Dense(r) => r.iter().zip(x).map(|(a, b)| a * b).sum(),
            RowView::Sparse { cols, vals } => cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum(),
        }
    }

    /// Calls `f(j, a_ij)` for each stored entry.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, f64)) {
        match *self {
            RowView::Dense(r) => r.iter().enumerate().for_each(|(j, &v)| f(j, v)),
            RowView::Sparse { cols, vals } => {
                cols.iter().zip(vals).for_each(|(&j, &v)| f(j, v))
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match *self {
            RowView::Dense(r) => r.iter().map(|v| v * v).sum(),
            RowView::Sparse { vals, .. } => vals.iter().map(|v| v * v).sum(),
        }
    }
}

fn check_values(vals: &[f64]) -> Result<()> {
    match vals.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::Domain(format!("matrix entries must be finite, found {v}"))),
        None => Ok(()),
    }
}

impl Mat {
    /// Builds a dense matrix from row-major data.
    pub fn dense(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        if ncols == 0 && nrows > 0 {
            return Err(Error::Shape("matrix needs at least one column".into()));
        }
        check_values(&data)?;
        Ok(Self {
            nrows,
            ncols,
            storage: Storage::Dense(data),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::Shape(format!(
                "ragged rows: expected {ncols} columns, found {}",
                bad.len()
            )));
        }
        Self::dense(rows.len(), ncols, rows.concat())
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                data.push(f(i, j));
            }
        }
        Self::dense(nrows, ncols, data)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }).expect("identity is valid")
    }

    /// Builds a row-compressed matrix. Column indices must be strictly
    /// increasing within each row.
    pub fn csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || row_ptr[nrows] != vals.len() {
            return Err(Error::Shape("row offsets do not describe the value array".into()));
        }
        if cols.len() != vals.len() {
            return Err(Error::Shape("column index and value arrays differ in length".into()));
        }
        if ncols == 0 && nrows > 0 {
            return Err(Error::Shape("matrix needs at least one column".into()));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::Shape(format!("row offsets decrease at row {i}")));
            }
            let row = &cols[lo..hi];
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!(
                    "column indices in row {i} are not strictly increasing"
                )));
            }
            if let Some(&j) = row.iter().find(|&&j| j >= ncols) {
                return Err(Error::Index { index: j, len: ncols });
            }
        }
        check_values(&vals)?;
        Ok(Self {
            nrows,
            ncols,
            storage: Storage::Csr { row_ptr, cols, vals },
        })
    }

    /// Builds a row-compressed matrix from per-row `(column, value)` lists.
    /// Entries are sorted; explicit zeros are dropped.
    pub fn csr_from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self::csr(row_ptr.len() - 1, ncols, row_ptr, cols, vals)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr { .. })
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.iter().filter(|v| **v != 0.0).count(),
            Storage::Csr { vals, .. } => vals.iter().filter(|v| **v != 0.0).count(),
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> RowView<'_> {
        match &self.storage {
            Storage::Dense(d) => RowView::Dense(&d[i * self.ncols..(i + 1) * self.ncols]),
            Storage::Csr { row_ptr, cols, vals } => {
                let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
                RowView::Sparse {
                    cols: &cols[lo..hi],
                    vals: &vals[lo..hi],
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.row(i) {
            RowView::Dense(r) => r[j],
            RowView::Sparse { cols, vals } => cols
                .binary_search(&j)
                .map(|k| vals[k])
                .unwrap_or(0.0),
        }
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Shape(format!(
                "vector of length {} cannot multiply a matrix with {} columns",
                x.len(),
                self.ncols
            )));
        }
        Ok((0..self.nrows).map(|i| self.row(i).dot(x)).collect())
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.nrows {
            return Err(Error::Shape(format!(
                "target of length {} does not match {} rows",
                b.len(),
                self.nrows
            )));
        }
        let mut r = self.mul_vec(x)?;
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
        Ok(r)
    }

    /// `A_{rows,*}` keeping the order of `rows`.
    pub fn row_submatrix(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&i) = rows.iter().find(|&&i| i >= self.nrows) {
            return Err(Error::Index { index: i, len: self.nrows });
        }
        match &self.storage {
            Storage::Dense(_) => {
                let mut data = Vec::with_capacity(rows.len() * self.ncols);
                for &i in rows {
                    if let RowView::Dense(r) = self.row(i) {
                        data.extend_from_slice(r);
                    }
                }
                Self::dense(rows.len(), self.ncols, data)
            }
            Storage::Csr { .. } => {
                let mut row_ptr = vec![0];
                let (mut cols, mut vals) = (Vec::new(), Vec::new());
                for &i in rows {
                    if let RowView::Sparse { cols: c, vals: v } = self.row(i) {
                        cols.extend_from_slice(c);
                        vals.extend_from_slice(v);
                    }
                    row_ptr.push(cols.len());
                }
                Self::csr(rows.len(), self.ncols, row_ptr, cols, vals)
            }
        }
    }

    /// The augmented matrix `[A b]`, in the same storage kind as `A`.
    pub fn augment(&self, b: &[f64]) -> Result<Self> {
        if b.len() != self.nrows {
            return Err(Error::Shape(format!(
                "column of length {} cannot augment {} rows",
                b.len(),
                self.nrows
            )));
        }
        let d = self.ncols + 1;
        match &self.storage {
            Storage::Dense(_) => {
                let mut data = Vec::with_capacity(self.nrows * d);
                for (i, &bi) in b.iter().enumerate() {
                    if let RowView::Dense(r) = self.row(i) {
                        data.extend_from_slice(r);
                    }
                    data.push(bi);
                }
                Self::dense(self.nrows, d, data)
            }
            Storage::Csr { .. } => {
                let rows = (0..self.nrows)
                    .map(|i| {
                        let mut row = Vec::new();
                        self.row(i).for_each(|j, v| row.push((j, v)));
                        row.push((self.ncols, b[i]));
                        row
                    })
                    .collect();
                Self::csr_from_rows(d, rows)
            }
        }
    }

    /// Row-major dense copy of the entries.
    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows)
            .map(|i| {
                let mut r = vec![0.0; self.ncols];
                self.row(i).for_each(|j, v| r[j] = v);
                r
            })
            .collect()
    }

    pub fn to_dense(&self) -> Self {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Csr { .. } => {
                Self::from_rows(&self.to_dense_rows()).expect("same entries, valid shape")
            }
        }
    }

    pub fn to_csr(&self) -> Self {
        match &self.storage {
            Storage::Csr { .. } => self.clone(),
            Storage::Dense(_) => {
                let rows = (0..self.nrows)
                    .map(|i| {
                        let mut row = Vec::new();
                        self.row(i).for_each(|j, v| row.push((j, v)));
                        row
                    })
                    .collect();
                Self::csr_from_rows(self.ncols, rows).expect("same entries, valid shape")
            }
        }
    }

    /// Column-major copy of `diag(scale) * A_{rows,*}`.
    pub(crate) fn gather_col_major(&self, rows: Option<&[usize]>, scale: Option<&[f64]>) -> Vec<f64> {
        let m = rows.map_or(self.nrows, <[usize]>::len);
        let mut out = vec![0.0; m * self.ncols];
        for k in 0..m {
            let i = rows.map_or(k, |r| r[k]);
            let s = scale.map_or(1.0, |s| s[k]);
            if s == 0.0 {
                continue;
            }
            self.row(i).for_each(|j, v| out[j * m + k] = s * v);
        }
        out
    }
}

/// A regression problem `min_x sum_i w_i M((Ax - b)_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    pub a: Mat,
    pub b: Vec<f64>,
    /// Per-row weights; `None` means all ones.
    pub weights: Option<Vec<f64>>,
}

impl RegressionInstance {
    pub fn new(a: Mat, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::Shape(format!(
                "target has {} entries but the matrix has {} rows",
                b.len(),
                a.nrows()
            )));
        }
        if let Some(v) = b.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("targets must be finite, found {v}")));
        }
        Ok(Self { a, b, weights: None })
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.b.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} rows",
                w.len(),
                self.b.len()
            )));
        }
        if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("weights must be finite and nonnegative, found {v}")));
        }
        self.weights = Some(w);
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// Weighted objective `||Ax - b||_{M,w}`.
    pub fn objective(&self, loss: &crate::LossSpec, x: &[f64]) -> Result<f64> {
        let r = self.a.residual(x, &self.b)?;
        loss.m_norm(&r, self.weights.as_deref())
    }
}
