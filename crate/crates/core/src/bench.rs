//! Synthetic data and the sketch-and-solve benchmark.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat, RegressionInstance};
use crate::loss::LossSpec;
use crate::msketch::{SketchSpec, SketchedProblem};
use crate::rng::{derive_seed, rng_from, tag};
use crate::rowsample::{sample_reduce, SampleConfig};
use crate::solver::{ratio_of, solve_instance, SolveOptions};

/// `n x d` standard Gaussian `A` and `b`.
pub fn gen_gaussian(n: usize, d: usize, seed: u64) -> Result<RegressionInstance> {
    if n <= d {
        return Err(Error::Parameter(format!("need n > d, got n = {n}, d = {d}")));
    }
    let mut rng = rng_from(seed, &[tag("gaussian")]);
    let a = Mat::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))?;
    let b = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    RegressionInstance::new(a, b)
}

/// Replaces `floor(fraction n)` distinct entries of `b` by `magnitude`.
pub fn inject_outliers(
    inst: &RegressionInstance,
    fraction: f64,
    magnitude: f64,
    seed: u64,
) -> Result<RegressionInstance> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Parameter(format!("outlier fraction must lie in [0,1], got {fraction}")));
    }
    if !magnitude.is_finite() {
        return Err(Error::Domain("outlier magnitude must be finite".into()));
    }
    let n = inst.nrows();
    let count = (fraction * n as f64).floor() as usize;
    let mut out = inst.clone();
    let mut rng = rng_from(seed, &[tag("outliers")]);
    for i in sample(&mut rng, n, count) {
        out.b[i] = magnitude;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    RowSample,
    MSketch,
    MSketchClipped,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::RowSample, Method::MSketch, Method::MSketchClipped];

    pub fn name(&self) -> &'static str {
        match self {
            Method::RowSample => "rowsample",
            Method::MSketch => "msketch",
            Method::MSketchClipped => "msketch-clipped",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Gaussian { n: usize, d: usize },
    Provided(RegressionInstance),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub dataset: Dataset,
    pub loss: LossSpec,
    pub outlier_fraction: f64,
    pub outlier_magnitude: f64,
    pub methods: Vec<Method>,
    /// Target row counts of the reduced problems.
    pub sizes: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    /// Used for the full problem and for every reduced problem.
    pub solve: SolveOptions,
    /// Error parameter passed to row sampling.
    pub eps: f64,
}

impl BenchPlan {
    pub fn new(dataset: Dataset, loss: LossSpec) -> Self {
        Self {
            dataset,
            loss,
            outlier_fraction: 0.0,
            outlier_magnitude: 1e4,
            methods: Method::ALL.to_vec(),
            sizes: Vec::new(),
            repetitions: 10,
            seed: 0,
            solve: SolveOptions::default(),
            eps: 0.5,
        }
    }

    /// Sizes `2d, 3d, ..., 10d`.
    pub fn default_sizes(d: usize) -> Vec<usize> {
        (2..=10).map(|k| k * d).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = match &self.dataset {
            Dataset::Gaussian { d, .. } => *d,
            Dataset::Provided(inst) => inst.ncols(),
        };
        if self.repetitions == 0 {
            return Err(Error::Parameter("repetitions must be at least 1".into()));
        }
        if self.methods.is_empty() || self.sizes.is_empty() {
            return Err(Error::Parameter("need at least one method and one size".into()));
        }
        if let Some(s) = self.sizes.iter().find(|&&s| s < d + 1) {
            return Err(Error::Parameter(format!("size {s} is below d + 1 = {}", d + 1)));
        }
        Ok(())
    }

    /// The instance the benchmark runs on, outliers included.
    pub fn instance(&self) -> Result<RegressionInstance> {
        let base = match &self.dataset {
            Dataset::Gaussian { n, d } => gen_gaussian(*n, *d, derive_seed(self.seed, &[tag("data")]))?,
            Dataset::Provided(inst) => inst.clone(),
        };
        if self.outlier_fraction > 0.0 {
            inject_outliers(
                &base,
                self.outlier_fraction,
                self.outlier_magnitude,
                derive_seed(self.seed, &[tag("outliers")]),
            )
        } else {
            Ok(base)
        }
    }
}

/// Outcome of one benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Solved,
    /// The target size exceeds the number of rows.
    Skipped,
    /// Reduction or solving reported a convergence-type error.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub size: usize,
    pub rep: usize,
    pub status: CellStatus,
    /// `NaN` unless the cell was solved.
    pub ratio: f64,
    pub wall_time_ms: f64,
    /// Rows of the reduced problem.
    pub rows_used: usize,
    pub objective: f64,
}

impl BenchRow {
    pub fn skipped(&self) -> bool {
        self.status == CellStatus::Skipped
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, CellStatus::Failed(_))
    }

    fn unsolved(method: Method, size: usize, rep: usize, status: CellStatus, wall_time_ms: f64) -> Self {
        Self {
            method,
            size,
            rep,
            status,
            ratio: f64::NAN,
            wall_time_ms,
            rows_used: 0,
            objective: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    /// Objective of the full-problem solution. A best-found local solution,
    /// not a certified optimum.
    pub reference_objective: f64,
    pub zero_objective: f64,
}

impl BenchResult {
    /// Smallest ratio over repetitions for one cell.
    pub fn best_ratio(&self, method: Method, size: usize) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.size == size && r.status == CellStatus::Solved)
            .map(|r| r.ratio)
            .min_by(f64::total_cmp)
    }

    /// Per method, `(size, best ratio)` in plan order.
    pub fn plot_series(&self) -> Vec<(Method, Vec<(usize, f64)>)> {
        let mut out: Vec<(Method, Vec<(usize, f64)>)> = Vec::new();
        for r in &self.rows {
            if out.iter().all(|(m, _)| *m != r.method) {
                out.push((r.method, Vec::new()));
            }
        }
        for (m, series) in &mut out {
            let mut sizes: Vec<usize> = self.rows.iter().filter(|r| r.method == *m).map(|r| r.size).collect();
            sizes.dedup();
            for s in sizes {
                if let Some(best) = self.best_ratio(*m, s) {
                    series.push((s, best));
                }
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "size", "rep", "ratio", "wall_time_ms"])?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                r.size.to_string(),
                r.rep.to_string(),
                match r.status {
                    CellStatus::Solved => r.ratio.to_string(),
                    CellStatus::Skipped => "skipped".into(),
                    CellStatus::Failed(_) => "failed".into(),
                },
                format!("{:.3}", r.wall_time_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_plot_data<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "size", "best_ratio"])?;
        for (m, series) in self.plot_series() {
            for (s, r) in series {
                w.write_record([m.name().to_string(), s.to_string(), r.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Reduces the instance with `method` to about `size` rows and solves the
/// reduced problem. Returns the solution and the reduced row count.
pub fn reduce_and_solve(
    inst: &RegressionInstance,
    loss: &LossSpec,
    method: Method,
    size: usize,
    eps: f64,
    seed: u64,
    solve: &SolveOptions,
) -> Result<(Vec<f64>, usize)> {
    match method {
        Method::RowSample => {
            let mut cfg = SampleConfig::new(loss, size);
            cfg.eps = eps;
            cfg.seed = seed;
            let report = sample_reduce(&inst.a, &inst.b, &cfg)?;
            let reduced = report.weights.reduce(&inst.a, &inst.b)?;
            Ok((solve_instance(&reduced, loss, solve)?.x, reduced.nrows()))
        }
        Method::MSketch | Method::MSketchClipped => {
            let mut spec = SketchSpec::for_dim(inst.nrows());
            spec.rows_cap = Some(size);
            let prob = SketchedProblem::new(&inst.a, &inst.b, &spec, seed)?;
            let rows = prob.sketch.rows();
            let x = prob.solve(loss, method == Method::MSketchClipped, solve)?.x;
            Ok((x, rows))
        }
    }
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchResult> {
    plan.validate()?;
    let inst = plan.instance()?;
    let n = inst.nrows();
    let loss = &plan.loss;
    let objective = |x: &[f64]| -> Result<f64> { loss.m_norm(&inst.a.residual(x, &inst.b)?, None) };

    let reference = solve_instance(&inst, loss, &plan.solve)?;
    let zero_objective = objective(&vec![0.0; inst.ncols()])?;
    // the origin is a candidate too
    let reference_objective = objective(&reference.x)?.min(zero_objective);

    let mut cells = Vec::new();
    for &method in &plan.methods {
        for &size in &plan.sizes {
            for rep in 0..plan.repetitions {
                cells.push((method, size, rep));
            }
        }
    }
    let rows = cells
        .into_par_iter()
        .map(|(method, size, rep)| -> Result<BenchRow> {
            if size > n {
                return Ok(BenchRow::unsolved(method, size, rep, CellStatus::Skipped, 0.0));
            }
            let seed = derive_seed(plan.seed, &[tag(method.name()), size as u64, rep as u64]);
            let start = Instant::now();
            let solved = reduce_and_solve(&inst, loss, method, size, plan.eps, seed, &plan.solve);
            let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let (x, rows_used) = match solved {
                Ok(v) => v,
                Err(e @ (Error::FlatStart(_) | Error::Convergence { .. } | Error::Stagnation { .. })) => {
                    let status = CellStatus::Failed(e.to_string());
                    return Ok(BenchRow::unsolved(method, size, rep, status, wall_time_ms));
                }
                Err(e) => return Err(e),
            };
            let obj = objective(&x)?;
            Ok(BenchRow {
                method,
                size,
                rep,
                status: CellStatus::Solved,
                ratio: ratio_of(obj, obj.min(reference_objective)),
                wall_time_ms,
                rows_used,
                objective: obj,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchResult {
        rows,
        reference_objective,
        zero_objective,
    })
}
