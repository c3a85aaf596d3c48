//! Recursive row sampling for M-norms.
//!
//! Starting from `w = 1^n`, each step splits the support of `w` into dyadic
//! weight classes, finds heavy rows of `[A b]` per class (kept with
//! probability one) and keeps every other row with probability
//! `min(1, 1/2 + C d^{max(0,p/2-1)} u_hat_i Y)`, rescaling survivors by
//! `1/p_i`. Because every probability is at least 1/2, weights at most double
//! per step and the support roughly halves.
//!
//! The recursion follows this rule while the support is at least `10F`, where
//! `F` is the expected number of rows kept beyond the uniform half. Below
//! that it switches to tail steps: no deterministic heavy set, and a uniform
//! floor `q >= 1/2` chosen so the expected support lands just under
//! `target_rows`. Tail steps keep unbiasedness and the factor-2 weight bound.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::heavy::{find_heavy_sparse, HeavyConfig};
use crate::lewis::{dimension_factor, lewis_rows, LewisOptions};
use crate::linalg::{Mat, RegressionInstance};
use crate::loss::LossSpec;
use crate::rng::{derive_seed, rng_from, tag};

/// Nonnegative per-row weights stored on their support.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn ones(n: usize) -> Self {
        Self {
            n,
            support: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from a support list (strictly increasing) and positive values.
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Shape("support and values differ in length".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("support must be strictly increasing".into()));
        }
        if let Some(&i) = support.iter().find(|&&i| i >= n) {
            return Err(Error::Index { index: i, len: n });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Contract(format!("stored weights must be positive, found {v}")));
        }
        Ok(Self { n, support, values })
    }

    pub fn from_dense(w: &[f64]) -> Result<Self> {
        let (mut support, mut values) = (Vec::new(), Vec::new());
        for (i, &v) in w.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Contract(format!("weights must be nonnegative, found {v}")));
            }
            if v > 0.0 {
                support.push(i);
                values.push(v);
            }
        }
        Self::new(w.len(), support, values)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `||w||_0`.
    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.support
            .binary_search(&i)
            .map(|k| self.values[k])
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    /// Checks `w_i >= 1` on the support and `||w||_inf <= n^2`.
    pub fn check_invariants(&self) -> Result<()> {
        if let Some(v) = self.values.iter().find(|&&v| v < 1.0) {
            return Err(Error::Contract(format!("stored weight {v} is below 1")));
        }
        let cap = (self.n as f64).powi(2);
        if self.max() > cap {
            return Err(Error::Contract(format!(
                "max weight {} exceeds n^2 = {cap}",
                self.max()
            )));
        }
        Ok(())
    }

    /// The weighted instance on the support rows.
    pub fn reduce(&self, a: &Mat, b: &[f64]) -> Result<RegressionInstance> {
        if a.nrows() != self.n || b.len() != self.n {
            return Err(Error::Shape(format!(
                "weights of length {} for {} rows",
                self.n,
                a.nrows()
            )));
        }
        let sub = a.row_submatrix(&self.support)?;
        let bs = self.support.iter().map(|&i| b[i]).collect();
        RegressionInstance::new(sub, bs)?.with_weights(self.values.clone())
    }
}

/// Dyadic class `j` with `2^{j-1} <= w < 2^j`, read off the float exponent.
fn class_of(w: f64) -> u32 {
    let exp = ((w.to_bits() >> 52) & 0x7ff) as i64 - 1023;
    (exp + 1).max(1) as u32
}

/// Partitions the support into occupied classes `P_j = {i : 2^{j-1} <= w_i < 2^j}`,
/// in increasing `j`.
pub fn weight_classes(w: &WeightVector) -> Vec<(u32, Vec<usize>)> {
    let mut classes: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (&i, &v) in w.support.iter().zip(&w.values) {
        classes.entry(class_of(v)).or_default().push(i);
    }
    classes.into_iter().collect()
}

/// How `Y` in the sampling probability is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YRule {
    /// `Y = c_y (d log(1/eps) + log(log n / delta) + (U/L) d log(n/eps) / eps^2)`.
    Theory { c_y: f64 },
    /// A fixed value.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    /// Target relative error of the whole recursion.
    pub eps: f64,
    /// Failure budget of the whole recursion.
    pub delta: f64,
    pub p: f64,
    pub tau: f64,
    /// `U_M / L_M` of the loss.
    pub growth_ratio: f64,
    /// Constant in the derived `alpha`.
    pub c_alpha: f64,
    /// Fixed `alpha`, bypassing the derived value (still clamped).
    pub alpha: Option<f64>,
    /// `alpha` is capped so every heavy-finder group has at least
    /// `group_rows * d` rows on average.
    pub group_rows: f64,
    /// `C_samp`, the constant multiplying `d^{..} u_hat_i Y`.
    pub oversample: f64,
    pub y_rule: YRule,
    /// Stop once the support is at most this many rows.
    pub target_rows: usize,
    /// Defaults to `ceil(log_{3/2} n) + 1`.
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// Constant in `|J|` for the heavy finder's round count.
    pub c_j: f64,
    pub lewis_slack: f64,
    pub lewis: LewisOptions,
}

impl SampleConfig {
    pub fn new(loss: &LossSpec, target_rows: usize) -> Self {
        Self {
            eps: 0.5,
            delta: 0.1,
            p: loss.p(),
            tau: loss.tau(),
            growth_ratio: loss.growth_bounds().ratio(),
            c_alpha: 1.0,
            alpha: None,
            group_rows: 32.0,
            oversample: 1.0,
            y_rule: YRule::Fixed(0.5),
            target_rows,
            max_depth: None,
            seed: 0,
            c_j: 1.0,
            lewis_slack: 1.0,
            lewis: LewisOptions::default(),
        }
    }

    fn validate(&self, d_aug: usize) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if self.target_rows < d_aug {
            return Err(Error::Parameter(format!(
                "target rows {} must be at least d + 1 = {d_aug}",
                self.target_rows
            )));
        }
        if !(self.p >= 1.0 && self.tau > 0.0 && self.growth_ratio >= 1.0) {
            return Err(Error::Parameter("invalid loss parameters".into()));
        }
        if !(1.0..=2.0).contains(&self.lewis_slack) {
            return Err(Error::Parameter("Lewis slack must lie in [1,2]".into()));
        }
        if !(self.oversample > 0.0 && self.c_alpha > 0.0 && self.group_rows > 0.0) {
            return Err(Error::Parameter("sampling constants must be positive".into()));
        }
        Ok(())
    }
}

/// Per-recursion constants: the per-step error and failure budgets and `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBudget {
    pub eps_step: f64,
    pub delta_o: f64,
    pub delta_struct: f64,
    pub y: f64,
    pub alpha: f64,
}

impl StepBudget {
    pub fn new(cfg: &SampleConfig, n: usize, d_aug: usize) -> Self {
        let log_n = (n as f64).log2().max(1.0);
        let eps_step = cfg.eps / log_n;
        let delta_o = cfg.delta / log_n;
        let delta_struct = delta_o / (4.0 * log_n);
        let d = d_aug as f64;
        // log of the net-size proxy: d log(n / eps)
        let log_net = d * (n as f64 / eps_step).ln();
        let y = match cfg.y_rule {
            YRule::Fixed(y) => y,
            YRule::Theory { c_y } => {
                c_y * (d * (1.0 / eps_step).ln()
                    + (log_n / delta_o).ln()
                    + cfg.growth_ratio * log_net / (eps_step * eps_step))
            }
        };
        let alpha = cfg.alpha.unwrap_or_else(|| {
            cfg.c_alpha * cfg.growth_ratio * (log_net + (log_n / delta_o).ln()) / (eps_step * eps_step)
        });
        Self {
            eps_step,
            delta_o,
            delta_struct,
            y,
            alpha,
        }
    }

    /// `alpha` for a class of `rows` rows: at least 1, at most `rows / (group_rows d)`.
    fn class_alpha(&self, cfg: &SampleConfig, rows: usize, d_aug: usize) -> f64 {
        let cap = (rows as f64 / (cfg.group_rows * d_aug as f64)).floor().max(1.0);
        self.alpha.clamp(1.0, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Heavy rows kept, floor 1/2.
    Theory,
    /// No heavy set, one joint class on the weighted rows, floor raised toward the target.
    Tail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub weights: WeightVector,
    /// Rows kept deterministically (union of per-class heavy sets), ascending.
    pub heavy: Vec<usize>,
    /// `(row, p_i)` for every row of the input support.
    pub probabilities: Vec<(usize, f64)>,
    /// `sum |I_j| + sum_{i not in I_j} C d^{..} u_hat_i Y`.
    pub f_value: f64,
    pub regime: Regime,
}

struct ClassPlan {
    j: u32,
    rows: Vec<usize>,
    heavy: Vec<bool>,
    /// `C_samp d^{..} u_hat_i Y`.
    extra: Vec<f64>,
}

fn plan_classes(
    aug: &Mat,
    w: &WeightVector,
    cfg: &SampleConfig,
    budget: &StepBudget,
    seed: u64,
    find_heavy: bool,
) -> Result<Vec<ClassPlan>> {
    let d_aug = aug.ncols();
    let factor = dimension_factor(d_aug, cfg.p);
    let mut plans = Vec::new();
    for (j, rows) in weight_classes(w) {
        let nonzero = rows.iter().any(|&i| aug.row(i).norm_sq() > 0.0);
        let u = if nonzero {
            lewis_rows(aug, Some(&rows), cfg.p, cfg.lewis)?.approximate(cfg.lewis_slack)
        } else {
            vec![0.0; rows.len()]
        };
        let extra: Vec<f64> = u
            .iter()
            .map(|ui| cfg.oversample * factor * ui * budget.y)
            .collect();
        let mut heavy = vec![false; rows.len()];
        if find_heavy && nonzero {
            let sub = aug.row_submatrix(&rows)?;
            let hcfg = HeavyConfig {
                alpha: budget.class_alpha(cfg, rows.len(), d_aug),
                p: cfg.p,
                tau: cfg.tau,
                delta: budget.delta_struct.min(0.5),
                seed: derive_seed(seed, &[tag("heavy"), j as u64]),
                c_j: cfg.c_j,
                lewis_slack: cfg.lewis_slack,
                lewis: cfg.lewis,
            };
            for k in find_heavy_sparse(&sub, &hcfg)?.indices {
                heavy[k] = true;
            }
        }
        plans.push(ClassPlan { j, rows, heavy, extra });
    }
    Ok(plans)
}

fn f_value(plans: &[ClassPlan]) -> f64 {
    plans
        .iter()
        .flat_map(|c| c.heavy.iter().zip(&c.extra))
        .map(|(&h, &e)| if h { 1.0 } else { e })
        .sum()
}

/// Uniform floor `q in [1/2, 1]` with `E|w'| + sd(|w'|) ~ target` when reachable.
fn tail_floor(plans: &[ClassPlan], target: usize) -> f64 {
    let moments = |q: f64| {
        let (mut mean, mut var) = (0.0, 0.0);
        for e in plans.iter().flat_map(|c| &c.extra) {
            let p = (q + e).min(1.0);
            mean += p;
            var += p * (1.0 - p);
        }
        mean + var.sqrt()
    };
    let t = target as f64;
    if moments(0.5) >= t {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if moments(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn draw(
    w: &WeightVector,
    plans: &[ClassPlan],
    floor: f64,
    use_heavy: bool,
    seed: u64,
) -> Result<(WeightVector, Vec<(usize, f64)>, Vec<usize>)> {
    let mut kept: Vec<(usize, f64)> = Vec::new();
    let mut probabilities = Vec::with_capacity(w.nnz());
    let mut heavy = Vec::new();
    for class in plans {
        let mut rng: ChaCha8Rng = rng_from(seed, &[tag("draw"), class.j as u64]);
        for (k, &i) in class.rows.iter().enumerate() {
            let p = if use_heavy && class.heavy[k] {
                heavy.push(i);
                1.0
            } else {
                (floor + class.extra[k]).min(1.0)
            };
            probabilities.push((i, p));
            // one uniform per row keeps draws aligned across probability changes
            let u: f64 = rng.random();
            if u < p {
                kept.push((i, w.get(i) / p));
            }
        }
    }
    kept.sort_by_key(|e| e.0);
    probabilities.sort_by_key(|e| e.0);
    heavy.sort_unstable();
    let (support, values) = kept.into_iter().unzip();
    Ok((WeightVector::new(w.len(), support, values)?, probabilities, heavy))
}

fn check_step_inputs(a: &Mat, b: &[f64], w: &WeightVector) -> Result<()> {
    if b.len() != a.nrows() || w.len() != a.nrows() {
        return Err(Error::Shape(format!(
            "{} rows, {} targets, {} weights",
            a.nrows(),
            b.len(),
            w.len()
        )));
    }
    w.check_invariants()
}

/// One recursive step with heavy rows kept and the 1/2 floor.
pub fn sample_step(a: &Mat, b: &[f64], w: &WeightVector, cfg: &SampleConfig) -> Result<StepReport> {
    check_step_inputs(a, b, w)?;
    let aug = a.augment(b)?;
    let budget = StepBudget::new(cfg, a.nrows(), aug.ncols());
    step_on(&aug, w, cfg, &budget, cfg.seed)
}

fn step_on(
    aug: &Mat,
    w: &WeightVector,
    cfg: &SampleConfig,
    budget: &StepBudget,
    seed: u64,
) -> Result<StepReport> {
    let plans = plan_classes(aug, w, cfg, budget, seed, true)?;
    let f = f_value(&plans);
    let (weights, probabilities, heavy) = draw(w, &plans, 0.5, true, seed)?;
    Ok(StepReport {
        weights,
        heavy,
        probabilities,
        f_value: f,
        regime: Regime::Theory,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub support_before: usize,
    pub support_after: usize,
    pub f_value: f64,
    pub heavy: usize,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceReport {
    pub weights: WeightVector,
    pub steps: Vec<StepSummary>,
}

impl ReduceReport {
    pub fn depth(&self) -> usize {
        self.steps.len()
    }
}

/// Runs sampling steps from `w = 1^n` until the support is at most
/// `target_rows` or the depth limit is hit.
pub fn sample_reduce(a: &Mat, b: &[f64], cfg: &SampleConfig) -> Result<ReduceReport> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::Shape(format!("{n} rows but {} targets", b.len())));
    }
    let aug = a.augment(b)?;
    cfg.validate(aug.ncols())?;
    let mut w = WeightVector::ones(n);
    let mut steps = Vec::new();
    if n <= cfg.target_rows {
        return Ok(ReduceReport { weights: w, steps });
    }
    let budget = StepBudget::new(cfg, n, aug.ncols());
    let max_depth = cfg
        .max_depth
        .unwrap_or_else(|| ((n as f64).ln() / 1.5f64.ln()).ceil() as usize + 1);
    let mut stalled = 0;

    for depth in 0..max_depth {
        if w.nnz() <= cfg.target_rows {
            break;
        }
        let seed = derive_seed(cfg.seed, &[tag("step"), depth as u64]);
        // the Lewis part of F is a lower bound; skip the heavy search when it
        // already rules out the theory regime
        let light = plan_classes(&aug, &w, cfg, &budget, seed, false)?;
        let mut report = None;
        if (w.nnz() as f64) >= 10.0 * f_value(&light) {
            let plans = plan_classes(&aug, &w, cfg, &budget, seed, true)?;
            let f = f_value(&plans);
            if (w.nnz() as f64) >= 10.0 * f {
                let (weights, probabilities, heavy) = draw(&w, &plans, 0.5, true, seed)?;
                report = Some(StepReport {
                    weights,
                    heavy,
                    probabilities,
                    f_value: f,
                    regime: Regime::Theory,
                });
            }
        }
        let report = match report {
            Some(r) => r,
            None => tail_step(&aug, &w, cfg, &budget, seed)?,
        };

        let before = w.nnz();
        let after = report.weights.nnz();
        steps.push(StepSummary {
            support_before: before,
            support_after: after,
            f_value: report.f_value,
            heavy: report.heavy.len(),
            regime: report.regime,
        });
        w = report.weights;
        if after >= before {
            stalled += 1;
            if stalled >= 3 {
                return Err(Error::Stagnation {
                    support: after,
                    steps: steps.len(),
                    target: cfg.target_rows,
                });
            }
        } else {
            stalled = 0;
        }
    }
    Ok(ReduceReport { weights: w, steps })
}

/// Redraws allowed for a tail step that happens not to shrink the support.
const TAIL_REDRAWS: u64 = 8;

/// Lewis weights of `diag(w)^{1/p} [A b]` over the whole support, as a single class.
fn joint_plan(aug: &Mat, w: &WeightVector, cfg: &SampleConfig, budget: &StepBudget) -> Result<ClassPlan> {
    let rows = w.support().to_vec();
    let d_aug = aug.ncols();
    let scaled: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            let s = w.get(i).powf(1.0 / cfg.p);
            let mut r = vec![0.0; d_aug];
            aug.row(i).for_each(|j, v| r[j] = s * v);
            r
        })
        .collect();
    let m = Mat::from_rows(&scaled)?;
    let u = if scaled.iter().any(|r| r.iter().any(|&v| v != 0.0)) {
        lewis_rows(&m, None, cfg.p, cfg.lewis)?.approximate(cfg.lewis_slack)
    } else {
        vec![0.0; rows.len()]
    };
    let factor = dimension_factor(d_aug, cfg.p);
    let extra = u.iter().map(|ui| cfg.oversample * factor * ui * budget.y).collect();
    Ok(ClassPlan {
        j: u32::MAX,
        heavy: vec![false; rows.len()],
        rows,
        extra,
    })
}

fn tail_step(aug: &Mat, w: &WeightVector, cfg: &SampleConfig, budget: &StepBudget, seed: u64) -> Result<StepReport> {
    let plans = [joint_plan(aug, w, cfg, budget)?];
    let f = f_value(&plans);
    let floor = tail_floor(&plans, cfg.target_rows);
    let mut attempt = 0;
    loop {
        let s = if attempt == 0 { seed } else { derive_seed(seed, &[tag("redraw"), attempt]) };
        let (weights, probabilities, heavy) = draw(w, &plans, floor, false, s)?;
        let certain = probabilities.iter().all(|&(_, p)| p >= 1.0);
        attempt += 1;
        if weights.nnz() < w.nnz() || certain || attempt >= TAIL_REDRAWS {
            return Ok(StepReport {
                weights,
                heavy,
                probabilities,
                f_value: f,
                regime: Regime::Tail,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport {
    /// `max_x | ||Ax||_{p,w'}^p / ||Ax||_{p,w}^p - 1 |` over the probes.
    pub max_deviation: f64,
    pub trials: usize,
    /// Whether `max_deviation <= eps`.
    pub within_eps: bool,
}

/// Compares weighted `l_p^p` norms of `A x` under two weight vectors for
/// random Gaussian `x`.
pub fn lp_preservation_check(
    a: &Mat,
    w: &WeightVector,
    w_new: &WeightVector,
    p: f64,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<PreservationReport> {
    if w.len() != a.nrows() || w_new.len() != a.nrows() {
        return Err(Error::Shape("weight vectors must match the row count".into()));
    }
    let mut rng = rng_from(seed, &[tag("lp-preservation")]);
    let mut max_deviation: f64 = 0.0;
    let norm = |y: &[f64], wv: &WeightVector| -> f64 {
        wv.support()
            .iter()
            .zip(wv.values())
            .map(|(&i, &v)| v * y[i].abs().powf(p))
            .sum()
    };
    for _ in 0..trials {
        let x: Vec<f64> = (0..a.ncols()).map(|_| rng.sample(StandardNormal)).collect();
        let y = a.mul_vec(&x)?;
        let old = norm(&y, w);
        if old == 0.0 {
            continue;
        }
        max_deviation = max_deviation.max((norm(&y, w_new) / old - 1.0).abs());
    }
    Ok(PreservationReport {
        max_deviation,
        trials,
        within_eps: max_deviation <= eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::Distribution;

    fn gaussian(n: usize, d: usize, seed: u64) -> (Mat, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng)).unwrap();
        let b = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        (a, b)
    }

    fn tukey_cfg(target: usize) -> SampleConfig {
        SampleConfig::new(&LossSpec::tukey(10.0).unwrap(), target)
    }

    #[test]
    fn classes_examples() {
        assert_eq!(weight_classes(&WeightVector::ones(3)), vec![(1, vec![0, 1, 2])]);
        let w = WeightVector::from_dense(&[1.0, 3.0, 3.0, 1000.0]).unwrap();
        assert_eq!(
            weight_classes(&w),
            vec![(1, vec![0]), (2, vec![1, 2]), (10, vec![3])]
        );
        let empty = WeightVector::from_dense(&[0.0, 0.0]).unwrap();
        assert!(weight_classes(&empty).is_empty());
        // exact powers of two open a new class
        let w = WeightVector::from_dense(&[2.0, 1.999_999, 4.0]).unwrap();
        assert_eq!(weight_classes(&w), vec![(1, vec![1]), (2, vec![0]), (3, vec![2])]);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(3, vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(WeightVector::new(3, vec![3], vec![1.0]).is_err());
        assert!(WeightVector::from_dense(&[-1.0]).is_err());
        let small = WeightVector::from_dense(&[0.5, 1.0]).unwrap();
        assert!(matches!(small.check_invariants(), Err(Error::Contract(_))));
        let huge = WeightVector::from_dense(&[5.0, 1.0]).unwrap();
        assert!(huge.check_invariants().is_err());
    }

    #[test]
    fn step_rejects_invalid_weights() {
        let (a, b) = gaussian(20, 2, 1);
        let mut dense = vec![1.0; 20];
        dense[3] = 0.25;
        let w = WeightVector::from_dense(&dense).unwrap();
        assert!(matches!(sample_step(&a, &b, &w, &tukey_cfg(5)), Err(Error::Contract(_))));
    }

    #[test]
    fn all_heavy_keeps_weights() {
        // fewer rows than columns of [A b]: every Lewis weight is 1
        let (a, b) = gaussian(3, 4, 2);
        let mut cfg = tukey_cfg(5);
        cfg.alpha = Some(1.0);
        let w = WeightVector::ones(3);
        let r = sample_step(&a, &b, &w, &cfg).unwrap();
        assert_eq!(r.weights, w);
        assert_eq!(r.heavy, vec![0, 1, 2]);
    }

    #[test]
    fn survivors_at_most_double() {
        let (a, b) = gaussian(500, 3, 3);
        let w = WeightVector::ones(500);
        let r = sample_step(&a, &b, &w, &tukey_cfg(10)).unwrap();
        for (&i, &v) in r.weights.support().iter().zip(r.weights.values()) {
            assert!(v <= 2.0 * w.get(i) + 1e-12);
        }
        assert!(r.probabilities.iter().all(|&(_, p)| (0.5..=1.0).contains(&p)));
        assert!(r.weights.nnz() < 500);
    }

    #[test]
    fn reduce_small_input_untouched() {
        let (a, b) = gaussian(30, 2, 4);
        let r = sample_reduce(&a, &b, &tukey_cfg(30)).unwrap();
        assert_eq!(r.weights, WeightVector::ones(30));
        assert_eq!(r.depth(), 0);
    }

    #[test]
    fn reduce_reaches_target() {
        let (a, b) = gaussian(3000, 5, 5);
        let mut cfg = tukey_cfg(18);
        cfg.seed = 3;
        let r = sample_reduce(&a, &b, &cfg).unwrap();
        assert!(r.weights.nnz() <= 18);
        assert!(r.weights.nnz() >= 6);
        r.weights.check_invariants().unwrap();
        assert!(r.depth() as f64 <= (3000f64).ln() / 1.5f64.ln());
        assert!(r.steps.iter().any(|s| s.regime == Regime::Theory));
        let inst = r.weights.reduce(&a, &b).unwrap();
        assert_eq!(inst.nrows(), r.weights.nnz());
    }

    #[test]
    fn target_below_d_is_rejected() {
        let (a, b) = gaussian(100, 5, 6);
        assert!(matches!(sample_reduce(&a, &b, &tukey_cfg(5)), Err(Error::Parameter(_))));
    }

    #[test]
    fn preservation_of_identical_weights_is_exact() {
        let (a, _) = gaussian(50, 3, 7);
        let w = WeightVector::ones(50);
        let r = lp_preservation_check(&a, &w, &w, 2.0, 0.5, 10, 1).unwrap();
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn reaches_targets_near_the_dimension_with_outliers() {
        let inst = crate::bench::gen_gaussian(2000, 4, 1).unwrap();
        let inst = crate::bench::inject_outliers(&inst, 0.05, 1e4, 2).unwrap();
        let mut cfg = SampleConfig::new(&LossSpec::tukey(10.0).unwrap(), 8);
        for seed in 0..20 {
            cfg.seed = seed;
            let r = sample_reduce(&inst.a, &inst.b, &cfg).unwrap();
            assert!(r.weights.nnz() <= 8, "seed {seed}: {} rows", r.weights.nnz());
        }
    }
}
