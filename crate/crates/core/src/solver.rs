//! Solvers for weighted robust regression.
//!
//! [`irls_solve`] runs iteratively reweighted least squares from several
//! starts and keeps the best. For the bisquare and clipped losses with
//! `p <= 2` each reweighted solve minimizes a quadratic majorizer of the
//! objective, so the objective never increases within a run.
//!
//! [`brute_force_solve`] is an exhaustive grid oracle for `d <= 2`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{wls, Mat, RegressionInstance};
use crate::loss::LossSpec;
use crate::rng::{rng_from, tag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Number of starts; the first is the weighted least-squares solution.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Radius of the first random perturbation. `None` picks `tau` divided
    /// by the root-mean-square row norm. Later restarts double it.
    pub perturb_radius: Option<f64>,
    /// Maximum number of l1 reweighting steps used to leave the flat region.
    pub warmup_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 200,
            tol: 1e-10,
            seed: 0,
            perturb_radius: None,
            warmup_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Iterations of the winning run.
    pub iterations: usize,
    /// Restarts that produced a usable run.
    pub restarts_used: usize,
    /// Objective after each iteration of the winning run.
    pub trace: Vec<f64>,
    /// Traces of every run, indexed by restart (empty for degenerate starts).
    pub traces: Vec<Vec<f64>>,
    pub best_restart: usize,
    pub converged: bool,
}

/// An objective in the residual `r = Ax - b` together with its IRLS weights.
pub(crate) trait Objective: Sync {
    fn value(&self, r: &[f64]) -> f64;
    /// Reweighting for the next least-squares solve; all zeros means the
    /// point is stationary for the majorizer.
    fn irls_weights(&self, r: &[f64], out: &mut [f64]);
    /// Fixed row weights (`None` is all ones).
    fn row_weights(&self) -> Option<&[f64]>;
    fn tau(&self) -> f64;
}

pub(crate) struct WeightedLoss<'a> {
    pub loss: &'a LossSpec,
    pub w: Option<&'a [f64]>,
}

impl Objective for WeightedLoss<'_> {
    fn value(&self, r: &[f64]) -> f64 {
        self.loss.weighted_sum(r, self.w)
    }

    fn irls_weights(&self, r: &[f64], out: &mut [f64]) {
        for (i, (o, &ri)) in out.iter_mut().zip(r).enumerate() {
            let wi = self.w.map_or(1.0, |w| w[i]);
            *o = if wi > 0.0 { wi * self.loss.weight(ri) } else { 0.0 };
        }
    }

    fn row_weights(&self) -> Option<&[f64]> {
        self.w
    }

    fn tau(&self) -> f64 {
        self.loss.tau()
    }
}

struct Run {
    x: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    converged: bool,
}

fn validate(a: &Mat, b: &[f64], w: Option<&[f64]>) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::Shape(format!("{} rows but {} targets", a.nrows(), b.len())));
    }
    if let Some(v) = b.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("targets must be finite, found {v}")));
    }
    if let Some(w) = w {
        if w.len() != a.nrows() {
            return Err(Error::Shape(format!("{} weights for {} rows", w.len(), a.nrows())));
        }
        if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Domain(format!("weights must be finite and nonnegative, found {v}")));
        }
    }
    Ok(())
}

/// IRLS with restarts for `min_x sum_i w_i M((Ax - b)_i)`.
pub fn irls_solve(
    a: &Mat,
    b: &[f64],
    w: Option<&[f64]>,
    loss: &LossSpec,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    validate(a, b, w)?;
    irls_with(a, b, &WeightedLoss { loss, w }, opts)
}

/// [`irls_solve`] on an instance, honouring its weights.
pub fn solve_instance(inst: &RegressionInstance, loss: &LossSpec, opts: &SolveOptions) -> Result<SolveReport> {
    irls_solve(&inst.a, &inst.b, inst.weights.as_deref(), loss, opts)
}

pub(crate) fn irls_with<O: Objective>(a: &Mat, b: &[f64], obj: &O, opts: &SolveOptions) -> Result<SolveReport> {
    if opts.restarts == 0 || opts.max_iter == 0 {
        return Err(Error::Parameter("restarts and max_iter must be positive".into()));
    }
    let (n, d) = (a.nrows(), a.ncols());
    let fixed: Vec<f64> = obj.row_weights().map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    if d == 0 || n == 0 {
        let x = vec![0.0; d];
        let objective = obj.value(&a.residual(&x, b)?);
        return Ok(SolveReport {
            x,
            objective,
            iterations: 0,
            restarts_used: 1,
            trace: vec![objective],
            traces: vec![vec![objective]],
            best_restart: 0,
            converged: true,
        });
    }
    let x_ls = wls(a, b, &fixed)?;
    let radius = opts.perturb_radius.unwrap_or_else(|| {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, &wi) in fixed.iter().enumerate() {
            num += wi * a.row(i).norm_sq();
            den += wi;
        }
        let rms = (num / den).sqrt();
        if rms > 0.0 {
            obj.tau() / rms
        } else {
            1.0
        }
    });

    let runs: Vec<Result<Option<Run>>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut x = x_ls.clone();
            if k > 0 {
                let mut rng = rng_from(opts.seed, &[tag("restart"), k as u64]);
                let r = radius * 2f64.powi(k as i32 - 1);
                for xi in &mut x {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *xi += r * g;
                }
            }
            single_run(a, b, obj, &fixed, x, opts)
        })
        .collect();

    let mut best: Option<(usize, Run)> = None;
    let mut traces = Vec::with_capacity(runs.len());
    let mut used = 0;
    for (k, run) in runs.into_iter().enumerate() {
        match run? {
            None => traces.push(Vec::new()),
            Some(run) => {
                used += 1;
                traces.push(run.trace.clone());
                if best.as_ref().is_none_or(|(_, b)| run.objective < b.objective) {
                    best = Some((k, run));
                }
            }
        }
    }
    let (k, run) = best.ok_or_else(|| {
        Error::FlatStart(format!(
            "all {} starts had every residual in the flat region after {} l1 steps",
            opts.restarts, opts.warmup_steps
        ))
    })?;
    Ok(SolveReport {
        iterations: run.trace.len() - 1,
        x: run.x,
        objective: run.objective,
        restarts_used: used,
        trace: run.trace,
        traces,
        best_restart: k,
        converged: run.converged,
    })
}

fn single_run<O: Objective>(
    a: &Mat,
    b: &[f64],
    obj: &O,
    fixed: &[f64],
    mut x: Vec<f64>,
    opts: &SolveOptions,
) -> Result<Option<Run>> {
    let n = a.nrows();
    let mut r = a.residual(&x, b)?;
    let mut omega = vec![0.0; n];
    obj.irls_weights(&r, &mut omega);

    // leave the flat region with l1 reweighting, which pulls the fit onto a
    // subset of rows
    let mut steps = 0;
    while omega.iter().all(|&o| o == 0.0) {
        if steps == opts.warmup_steps {
            return Ok(None);
        }
        let scale = r.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let l1: Vec<f64> = fixed
            .iter()
            .zip(&r)
            .map(|(&wi, &ri)| wi / ri.abs().max(1e-12 * scale))
            .collect();
        x = wls(a, b, &l1)?;
        r = a.residual(&x, b)?;
        obj.irls_weights(&r, &mut omega);
        steps += 1;
    }

    let mut f = obj.value(&r);
    let mut trace = vec![f];
    let mut converged = false;
    for _ in 0..opts.max_iter {
        if omega.iter().all(|&o| o == 0.0) {
            converged = true;
            break;
        }
        let x_new = match wls(a, b, &omega) {
            Ok(x) => x,
            Err(Error::DegenerateWeights(_)) => {
                converged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let r_new = a.residual(&x_new, b)?;
        let f_new = obj.value(&r_new);
        // reject any step that does not decrease; this only triggers at
        // round-off level for majorized objectives
        if !(f_new <= f) {
            converged = true;
            break;
        }
        let decrease = (f - f_new) / f.max(f64::MIN_POSITIVE);
        x = x_new;
        r = r_new;
        f = f_new;
        trace.push(f);
        if decrease < opts.tol || f == 0.0 {
            converged = true;
            break;
        }
        obj.irls_weights(&r, &mut omega);
    }
    Ok(Some(Run {
        x,
        objective: f,
        trace,
        converged,
    }))
}

/// Grid resolution for [`brute_force_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per axis of the coarse grid.
    pub points: usize,
    /// Number of zoom passes; each shrinks the cell size by a factor 5.
    pub zoom_levels: usize,
    /// Candidates kept per zoom pass.
    pub keep: usize,
    /// Half-width of the search box. `None` uses
    /// `radius_factor * ||b||_inf / min |A_ij|` over nonzero entries.
    pub radius: Option<f64>,
    pub radius_factor: f64,
}

impl GridSpec {
    pub fn for_dim(d: usize) -> Self {
        Self {
            points: if d <= 1 { 4001 } else { 401 },
            zoom_levels: 6,
            keep: 8,
            radius: None,
            radius_factor: 2.0,
        }
    }

    fn box_radius(&self, a: &Mat, b: &[f64]) -> f64 {
        if let Some(r) = self.radius {
            return r;
        }
        let mut min_a = f64::INFINITY;
        for i in 0..a.nrows() {
            a.row(i).for_each(|_, v| {
                if v != 0.0 {
                    min_a = min_a.min(v.abs());
                }
            });
        }
        let b_inf = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if min_a.is_finite() && b_inf > 0.0 {
            self.radius_factor * b_inf / min_a
        } else {
            1.0
        }
    }
}

/// Exhaustive search over a box for `d <= 2`: a coarse grid, repeated zooms
/// around the best cells, then a pattern search.
pub fn brute_force_solve(
    a: &Mat,
    b: &[f64],
    w: Option<&[f64]>,
    loss: &LossSpec,
    grid: &GridSpec,
) -> Result<SolveReport> {
    let d = a.ncols();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    validate(a, b, w)?;
    if grid.points < 2 || grid.keep == 0 {
        return Err(Error::Parameter("grid needs at least 2 points and 1 candidate".into()));
    }
    let eval = |x: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..a.nrows() {
            let wi = w.map_or(1.0, |w| w[i]);
            if wi > 0.0 {
                total += wi * loss.value(a.row(i).dot(x) - b[i]);
            }
        }
        total
    };
    if d == 0 {
        let objective = eval(&[]);
        return Ok(SolveReport {
            x: Vec::new(),
            objective,
            iterations: 0,
            restarts_used: 1,
            trace: vec![objective],
            traces: vec![vec![objective]],
            best_restart: 0,
            converged: true,
        });
    }

    let radius = grid.box_radius(a, b);
    let mut step = 2.0 * radius / (grid.points - 1) as f64;
    let axis = |center: f64, half: usize, step: f64| -> Vec<f64> {
        (0..=2 * half).map(|k| center + (k as f64 - half as f64) * step).collect()
    };
    let lattice = |centers: &[f64], half: usize, step: f64| -> Vec<Vec<f64>> {
        let xs = axis(centers[0], half, step);
        if d == 1 {
            return xs.into_iter().map(|v| vec![v]).collect();
        }
        let ys = axis(centers[1], half, step);
        xs.iter()
            .flat_map(|&u| ys.iter().map(move |&v| vec![u, v]))
            .collect()
    };
    let top = |points: Vec<Vec<f64>>, keep: usize| -> Vec<(f64, Vec<f64>)> {
        let mut scored: Vec<(f64, Vec<f64>)> = points.into_par_iter().map(|x| (eval(&x), x)).collect();
        scored.sort_by(|p, q| p.0.total_cmp(&q.0));
        scored.truncate(keep);
        scored
    };

    let half = (grid.points - 1) / 2;
    let mut candidates = top(lattice(&vec![0.0; d], half, step), grid.keep);
    let mut trace = vec![candidates[0].0];
    for _ in 0..grid.zoom_levels {
        let fine = step / 5.0;
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for (_, c) in &candidates {
            pts.extend(lattice(c, 10, fine));
        }
        candidates = top(pts, grid.keep);
        step = fine;
        trace.push(candidates[0].0);
    }

    // pattern search around the best point
    let (mut f, mut x) = candidates.swap_remove(0);
    let mut h = step;
    let floor = 1e-13 * radius.max(1.0);
    while h > floor {
        let mut improved = false;
        for j in 0..d {
            for s in [h, -h] {
                let mut y = x.clone();
                y[j] += s;
                let fy = eval(&y);
                if fy < f {
                    f = fy;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    trace.push(f);
    Ok(SolveReport {
        iterations: trace.len() - 1,
        x,
        objective: f,
        restarts_used: 1,
        traces: vec![trace.clone()],
        trace,
        best_restart: 0,
        converged: true,
    })
}

/// `||A x_hat - b||_M / ||A x_ref - b||_M`, with `0/0 = 1` and `c/0 = inf`.
pub fn approx_ratio(a: &Mat, b: &[f64], loss: &LossSpec, x_hat: &[f64], x_ref: &[f64]) -> Result<f64> {
    let num = loss.m_norm(&a.residual(x_hat, b)?, None)?;
    let den = loss.m_norm(&a.residual(x_ref, b)?, None)?;
    Ok(ratio_of(num, den))
}

pub(crate) fn ratio_of(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}
