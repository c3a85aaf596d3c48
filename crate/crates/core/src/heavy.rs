//! Finding the coordinates that can ever be heavy (`|y_i| > tau`) for
//! low-cost vectors `y` in the column span of `A`.
//!
//! Both finders threshold Lewis weights: the deterministic one repeatedly
//! peels off rows whose weight in the remaining matrix is at least
//! `1/(2 alpha)`; the randomized one partitions rows into `alpha` random groups
//! and keeps rows whose (approximate) group-local weight is at least `1/6`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lewis::{dimension_factor, lewis_rows, LewisOptions};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyConfig {
    /// Cost budget: vectors with `||y_L||_p^p <= alpha tau^p` and `|H_y| <= alpha`.
    pub alpha: f64,
    pub p: f64,
    pub tau: f64,
    /// Failure budget of the randomized finder.
    pub delta: f64,
    pub seed: u64,
    /// Constant in `|J| = c_j d^{max(p/2,1)} alpha^2`, which sets the round count.
    pub c_j: f64,
    /// Inflation of group-local weights, in `[1, 2]`.
    pub lewis_slack: f64,
    pub lewis: LewisOptions,
}

impl HeavyConfig {
    pub fn new(alpha: f64, p: f64, tau: f64) -> Self {
        Self {
            alpha,
            p,
            tau,
            delta: 0.01,
            seed: 0,
            c_j: 1.0,
            lewis_slack: 1.0,
            lewis: LewisOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(Error::Parameter(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::Parameter(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        if !(1.0..=2.0).contains(&self.lewis_slack) {
            return Err(Error::Parameter(format!(
                "Lewis slack must lie in [1,2], got {}",
                self.lewis_slack
            )));
        }
        if !(self.c_j > 0.0) {
            return Err(Error::Parameter("c_j must be positive".into()));
        }
        Ok(())
    }

    /// `ceil(alpha)`: outer repetitions of the deterministic finder and group
    /// count of the randomized one.
    pub fn groups(&self) -> usize {
        self.alpha.ceil() as usize
    }

    /// `c_j d^{max(p/2,1)} alpha^2`.
    pub fn poly_size_bound(&self, d: usize) -> f64 {
        self.c_j * (d as f64).powf((self.p / 2.0).max(1.0)) * self.alpha * self.alpha
    }

    /// `ceil(log2(|J| / delta))`, at least 1.
    pub fn sparse_rounds(&self, d: usize) -> usize {
        let j = self.poly_size_bound(d).max(1.0);
        ((j / self.delta).log2().ceil() as usize).max(1)
    }
}

/// One addition made by a finder: the row and the weight that crossed the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Addition {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyRound {
    /// Row groups whose Lewis weights were computed this round.
    pub groups: Vec<Vec<usize>>,
    pub added: Vec<Addition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavySet {
    /// Selected rows in ascending order.
    pub indices: Vec<usize>,
    pub rounds: Vec<HeavyRound>,
}

impl HeavySet {
    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Lewis weights of a group, or `None` when every row in it is zero.
fn group_weights(a: &Mat, rows: &[usize], p: f64, opts: LewisOptions) -> Result<Option<Vec<f64>>> {
    if rows.iter().all(|&i| a.row(i).norm_sq() == 0.0) {
        return Ok(None);
    }
    Ok(Some(lewis_rows(a, Some(rows), p, opts)?.u))
}

/// Deterministic finder: `ceil(alpha)` passes over the rows not yet selected,
/// adding `i` whenever `d^{max(0,p/2-1)} u_i >= 1/(2 alpha)`.
pub fn find_heavy_poly(a: &Mat, cfg: &HeavyConfig) -> Result<HeavySet> {
    cfg.validate()?;
    let n = a.nrows();
    let factor = dimension_factor(a.ncols(), cfg.p);
    let threshold = 1.0 / (2.0 * cfg.alpha);
    let mut selected = vec![false; n];
    let mut rounds = Vec::with_capacity(cfg.groups());

    for _ in 0..cfg.groups() {
        let rest: Vec<usize> = (0..n).filter(|&i| !selected[i]).collect();
        let mut added = Vec::new();
        if !rest.is_empty() {
            if let Some(u) = group_weights(a, &rest, cfg.p, cfg.lewis)? {
                for (&i, &ui) in rest.iter().zip(&u) {
                    if factor * ui >= threshold {
                        added.push(Addition { index: i, weight: ui });
                    }
                }
            }
        }
        for add in &added {
            selected[add.index] = true;
        }
        rounds.push(HeavyRound {
            groups: vec![rest],
            added,
        });
    }

    Ok(HeavySet {
        indices: (0..n).filter(|&i| selected[i]).collect(),
        rounds,
    })
}

/// Randomized finder: `ceil(log2(|J|/delta))` rounds, each assigning every
/// row an independent uniform group label in `[ceil(alpha)]` and adding rows
/// with `d^{max(0,p/2-1)} u_hat_i >= 1/6` in their group. Empty groups are skipped.
pub fn find_heavy_sparse(a: &Mat, cfg: &HeavyConfig) -> Result<HeavySet> {
    cfg.validate()?;
    let n = a.nrows();
    let groups = cfg.groups();
    if groups > n {
        return Err(Error::Parameter(format!(
            "cannot partition {n} rows into {groups} groups"
        )));
    }
    let factor = dimension_factor(a.ncols(), cfg.p);
    let mut rng = crate::rng::rng_from(cfg.seed, &[crate::rng::tag("heavy-sparse")]);
    let mut selected = vec![false; n];
    let n_rounds = cfg.sparse_rounds(a.ncols());
    let mut rounds = Vec::with_capacity(n_rounds);

    for _ in 0..n_rounds {
        let mut members = vec![Vec::new(); groups];
        for i in 0..n {
            members[rng.random_range(0..groups)].push(i);
        }
        members.retain(|g| !g.is_empty());
        let mut added = Vec::new();
        for group in &members {
            if let Some(u) = group_weights(a, group, cfg.p, cfg.lewis)? {
                for (&i, &ui) in group.iter().zip(&u) {
                    let approx = cfg.lewis_slack * ui;
                    if factor * approx >= 1.0 / 6.0 {
                        added.push(Addition { index: i, weight: approx });
                    }
                }
            }
        }
        added.sort_by_key(|a| a.index);
        for add in &added {
            selected[add.index] = true;
        }
        rounds.push(HeavyRound {
            groups: members,
            added,
        });
    }

    Ok(HeavySet {
        indices: (0..n).filter(|&i| selected[i]).collect(),
        rounds,
    })
}
