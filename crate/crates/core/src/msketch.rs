//! The multi-level M-sketch.
//!
//! Every input coordinate `p` gets a level `h_p` with `Pr[h_p = h] = 1/(beta b^h)`,
//! a bucket `g_p` among `N = b c m` and a random sign. The sketch adds
//! `sign * z_p` into row `g_p + N h_p`, and level `h` rows carry weight
//! `beta b^h`, so `sum_h beta b^h sum_i M((Sz)_{h,i})` estimates `||z||_M`
//! with the right scale when buckets do not collide. The clipped estimator
//! keeps only the `M*` largest buckets of each level.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{Mat, RegressionInstance};
use crate::loss::LossSpec;
use crate::rng::{rng_from, tag};
use crate::solver::{irls_with, Objective, SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchSpec {
    /// Branching factor between levels.
    pub b: usize,
    pub c: usize,
    pub m: usize,
    /// Ratio between weight classes in the clipping constants.
    pub gamma: f64,
    pub eps: f64,
    /// Total number of sketch rows allowed; shrinks the per-level bucket
    /// count and then the number of levels.
    pub rows_cap: Option<usize>,
    /// Overrides `N = b c m`.
    pub buckets: Option<usize>,
    /// Overrides the clipping count `M*`.
    pub clip: Option<usize>,
}

impl SketchSpec {
    /// Defaults for an input of dimension `n`: `m = 64`, `b = ceil(n^{1/3})`
    /// clamped to `[2, 64]`, `c = 8`, `gamma = 2`, `eps = 1/10`.
    pub fn for_dim(n: usize) -> Self {
        let b = ((n as f64).cbrt().ceil() as usize).clamp(2, 64);
        Self {
            b,
            c: 8,
            m: 64,
            gamma: 2.0,
            eps: 0.1,
            rows_cap: None,
            buckets: None,
            clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 || self.c < 2 || self.m < 2 {
            return Err(Error::Parameter(format!(
                "b, c, m must exceed 1 (got b = {}, c = {}, m = {})",
                self.b, self.c, self.m
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Parameter(format!("gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if self.rows_cap == Some(0) || self.buckets == Some(0) {
            return Err(Error::Parameter("rows cap and bucket count must be positive".into()));
        }
        Ok(())
    }

    /// Largest `h` with `b^h m <= n`.
    pub fn hmax(&self, n: usize) -> usize {
        let mut h = 0;
        let mut reach = self.m as u128 * self.b as u128;
        while reach <= n as u128 {
            h += 1;
            reach *= self.b as u128;
        }
        h
    }

    /// `log_gamma(m / eps)`.
    pub fn m_small(&self) -> f64 {
        (self.m as f64 / self.eps).ln() / self.gamma.ln()
    }

    /// `log_gamma(2 (1 + 3 eps) b / eps)`.
    pub fn m_large(&self) -> f64 {
        (2.0 * (1.0 + 3.0 * self.eps) * self.b as f64 / self.eps).ln() / self.gamma.ln()
    }

    /// `M* = b m M_>= + beta m M_<`, rounded up.
    pub fn clip_count(&self, beta: f64) -> usize {
        self.clip.unwrap_or_else(|| {
            let (b, m) = (self.b as f64, self.m as f64);
            (b * m * self.m_large() + beta * m * self.m_small()).ceil() as usize
        })
    }
}

/// `(b - b^{-hmax}) / (b - 1)`, the normalizer of the level distribution.
pub fn beta(b: usize, hmax: usize) -> f64 {
    let b = b as f64;
    (b - b.powi(-(hmax as i32))) / (b - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchMatrix {
    spec: SketchSpec,
    n: usize,
    levels: usize,
    buckets: usize,
    beta: f64,
    level: Vec<u16>,
    bucket: Vec<u32>,
    negative: Vec<bool>,
}

/// Draws the sketch for inputs of dimension `n`. Depends only on `n`, the spec
/// and the seed.
pub fn draw_sketch(n: usize, spec: &SketchSpec, seed: u64) -> Result<SketchMatrix> {
    spec.validate()?;
    if n < spec.m {
        return Err(Error::Parameter(format!("sketch needs n >= m = {}, got n = {n}", spec.m)));
    }
    let mut levels = spec.hmax(n) + 1;
    let mut buckets = spec.buckets.unwrap_or(spec.b * spec.c * spec.m);
    if let Some(cap) = spec.rows_cap {
        if levels * buckets > cap {
            levels = levels.min(cap);
            buckets = (cap / levels).max(1);
        }
        // drop levels whose buckets would expect fewer than one coordinate
        while levels > 1 {
            let h = levels - 1;
            let occupancy = n as f64 / (beta(spec.b, h) * (spec.b as f64).powi(h as i32) * buckets as f64);
            if occupancy >= 1.0 {
                break;
            }
            levels -= 1;
        }
    }
    let beta = beta(spec.b, levels - 1);

    // cumulative level probabilities
    let mut cdf = Vec::with_capacity(levels);
    let mut acc = 0.0;
    for h in 0..levels {
        acc += 1.0 / (beta * (spec.b as f64).powi(h as i32));
        cdf.push(acc);
    }
    let mut rng = rng_from(seed, &[tag("msketch"), n as u64]);
    let mut level = Vec::with_capacity(n);
    let mut bucket = Vec::with_capacity(n);
    let mut negative = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let h = cdf.iter().position(|&c| u < c).unwrap_or(levels - 1);
        level.push(h as u16);
        bucket.push(rng.random_range(0..buckets) as u32);
        negative.push(rng.random::<bool>());
    }
    Ok(SketchMatrix {
        spec: *spec,
        n,
        levels,
        buckets,
        beta,
        level,
        bucket,
        negative,
    })
}

impl SketchMatrix {
    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    /// Input dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Highest level in use.
    pub fn hmax(&self) -> usize {
        self.levels - 1
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Buckets per level.
    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Output dimension `N (hmax + 1)`.
    pub fn rows(&self) -> usize {
        self.levels * self.buckets
    }

    pub fn clip_count(&self) -> usize {
        self.spec.clip_count(self.beta)
    }

    /// `1 / (beta b^h)`.
    pub fn level_probability(&self, h: usize) -> f64 {
        1.0 / self.level_weight(h)
    }

    /// `beta b^h`.
    pub fn level_weight(&self, h: usize) -> f64 {
        self.beta * (self.spec.b as f64).powi(h as i32)
    }

    /// Weight of every output row, level by level.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.rows()).map(|r| self.level_weight(r / self.buckets)).collect()
    }

    /// `(level, bucket, sign)` of input coordinate `p`.
    pub fn column(&self, p: usize) -> (usize, usize, f64) {
        let sign = if self.negative[p] { -1.0 } else { 1.0 };
        (self.level[p] as usize, self.bucket[p] as usize, sign)
    }

    #[inline]
    fn target(&self, p: usize) -> (usize, f64) {
        let (h, g, s) = self.column(p);
        (g + self.buckets * h, s)
    }

    /// `S z`.
    pub fn apply_vec(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::Shape(format!("sketch of dimension {} applied to length {}", self.n, z.len())));
        }
        let mut out = vec![0.0; self.rows()];
        for (p, &v) in z.iter().enumerate() {
            let (r, s) = self.target(p);
            out[r] += s * v;
        }
        Ok(out)
    }

    /// `S A`, in a single pass over the stored entries of `A`.
    pub fn apply(&self, a: &Mat) -> Result<Mat> {
        if a.nrows() != self.n {
            return Err(Error::Shape(format!("sketch of dimension {} applied to {} rows", self.n, a.nrows())));
        }
        let mut acc = SketchAccumulator::new(self, a.ncols());
        for i in 0..a.nrows() {
            a.row(i).for_each(|j, v| acc.add(i, j, v));
        }
        acc.finish()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.rows() {
            return Err(Error::Shape(format!("sketched vector has length {}, expected {}", v.len(), self.rows())));
        }
        Ok(())
    }

    /// `sum_{h,i} beta b^h M(v[h,i])`.
    pub fn estimate(&self, v: &[f64], loss: &LossSpec) -> Result<f64> {
        self.check_len(v)?;
        Ok(v.chunks(self.buckets)
            .enumerate()
            .map(|(h, level)| self.level_weight(h) * level.iter().map(|&x| loss.value(x)).sum::<f64>())
            .sum())
    }

    /// The estimate restricted to the `M*` largest buckets of each level.
    pub fn estimate_clipped(&self, v: &[f64], loss: &LossSpec) -> Result<f64> {
        self.check_len(v)?;
        let mut mask = vec![false; v.len()];
        self.clip_mask(v, &mut mask);
        Ok(v.iter()
            .zip(&mask)
            .enumerate()
            .filter(|(_, (_, &keep))| keep)
            .map(|(r, (&x, _))| self.level_weight(r / self.buckets) * loss.value(x))
            .sum())
    }

    /// Marks the top `M*` buckets per level by magnitude, lower index first on ties.
    fn clip_mask(&self, v: &[f64], mask: &mut [bool]) {
        let keep = self.clip_count();
        let mut order: Vec<usize> = Vec::with_capacity(self.buckets);
        for h in 0..self.levels {
            let base = h * self.buckets;
            let level = &v[base..base + self.buckets];
            if keep >= self.buckets {
                mask[base..base + self.buckets].fill(true);
                continue;
            }
            mask[base..base + self.buckets].fill(false);
            order.clear();
            order.extend(0..self.buckets);
            order.sort_by(|&i, &j| level[j].abs().total_cmp(&level[i].abs()).then(i.cmp(&j)));
            for &i in &order[..keep] {
                mask[base + i] = true;
            }
        }
    }
}

/// Builds `S A` from rows arriving in any order.
pub struct SketchAccumulator<'a> {
    sketch: &'a SketchMatrix,
    d: usize,
    out: Vec<f64>,
}

impl<'a> SketchAccumulator<'a> {
    pub fn new(sketch: &'a SketchMatrix, d: usize) -> Self {
        Self {
            sketch,
            d,
            out: vec![0.0; sketch.rows() * d],
        }
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, s) = self.sketch.target(i);
        self.out[r * self.d + j] += s * v;
    }

    /// Adds row `i` of the input.
    pub fn push_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        if i >= self.sketch.n {
            return Err(Error::Index { index: i, len: self.sketch.n });
        }
        if row.len() != self.d {
            return Err(Error::Shape(format!("row of length {}, expected {}", row.len(), self.d)));
        }
        for (j, &v) in row.iter().enumerate() {
            self.add(i, j, v);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<Mat> {
        Mat::dense(self.sketch.rows(), self.d, self.out)
    }
}

/// The sketched regression problem `min_x ||S A x - S b||_{M,w}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchedProblem {
    pub sketch: SketchMatrix,
    pub sa: Mat,
    pub sb: Vec<f64>,
}

impl SketchedProblem {
    pub fn new(a: &Mat, b: &[f64], spec: &SketchSpec, seed: u64) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::Shape(format!("{} rows but {} targets", a.nrows(), b.len())));
        }
        let sketch = draw_sketch(a.nrows(), spec, seed)?;
        let sa = sketch.apply(a)?;
        let sb = sketch.apply_vec(b)?;
        Ok(Self { sketch, sa, sb })
    }

    /// `(SA, Sb)` with the level weights attached.
    pub fn instance(&self) -> Result<RegressionInstance> {
        RegressionInstance::new(self.sa.clone(), self.sb.clone())?.with_weights(self.sketch.weights())
    }

    /// Solves with IRLS on the plain or the clipped estimator. Only `p <= 2`
    /// is supported.
    pub fn solve(&self, loss: &LossSpec, clipped: bool, opts: &SolveOptions) -> Result<SolveReport> {
        if loss.p() > 2.0 {
            return Err(Error::Parameter(format!(
                "sketched regression requires p <= 2, got p = {}",
                loss.p()
            )));
        }
        let weights = self.sketch.weights();
        let obj = SketchObjective {
            sketch: &self.sketch,
            loss,
            weights: &weights,
            clipped,
        };
        irls_with(&self.sa, &self.sb, &obj, opts)
    }
}

struct SketchObjective<'a> {
    sketch: &'a SketchMatrix,
    loss: &'a LossSpec,
    weights: &'a [f64],
    clipped: bool,
}

impl Objective for SketchObjective<'_> {
    fn value(&self, r: &[f64]) -> f64 {
        if self.clipped {
            self.sketch.estimate_clipped(r, self.loss)
        } else {
            self.sketch.estimate(r, self.loss)
        }
        .unwrap_or(f64::INFINITY)
    }

    fn irls_weights(&self, r: &[f64], out: &mut [f64]) {
        for ((o, &ri), &w) in out.iter_mut().zip(r).zip(self.weights) {
            *o = w * self.loss.weight(ri);
        }
        if self.clipped {
            let mut mask = vec![false; r.len()];
            self.sketch.clip_mask(r, &mut mask);
            for (o, keep) in out.iter_mut().zip(mask) {
                if !keep {
                    *o = 0.0;
                }
            }
        }
    }

    fn row_weights(&self) -> Option<&[f64]> {
        Some(self.weights)
    }

    fn tau(&self) -> f64 {
        self.loss.tau()
    }
}
