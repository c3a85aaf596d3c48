//! Robust regression instances built from 3-SAT formulas.
//!
//! Variable `i` appearing `G_i` times contributes `G_i` rows with target 0
//! and `G_i` rows with target `10 tau`, both on `e_i`. Each clause contributes
//! three rows with targets `10 tau`, `20 tau`, `30 tau`, where a negative
//! literal `!v_j` enters as `10 tau - x_j`. At a Boolean point
//! (`x_i in {0, 10 tau}`) every variable pair costs exactly `C` per occurrence
//! and a clause costs `2C` when satisfied and `3C` otherwise, so satisfiable
//! formulas reach `5 C m`.

use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Mat, RegressionInstance};
use crate::loss::LossSpec;
use crate::rng::{rng_from, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    /// Zero-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    /// From a nonzero signed one-based index, as in DIMACS.
    pub fn from_signed(v: i64) -> Result<Self> {
        if v == 0 {
            return Err(Error::Format("literal 0 is not a variable".into()));
        }
        Ok(Self {
            var: v.unsigned_abs() as usize - 1,
            negated: v < 0,
        })
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    /// Every clause needs exactly three literals on distinct variables below `num_vars`.
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        let mut out = Vec::with_capacity(clauses.len());
        for (k, c) in clauses.into_iter().enumerate() {
            let clause: [Literal; 3] = c.try_into().map_err(|c: Vec<Literal>| {
                Error::Format(format!("clause {k} has {} literals, expected 3", c.len()))
            })?;
            if let Some(l) = clause.iter().find(|l| l.var >= num_vars) {
                return Err(Error::Format(format!(
                    "clause {k} uses variable {} but the formula has {num_vars}",
                    l.var + 1
                )));
            }
            let [a, b, c] = clause.map(|l| l.var);
            if a == b || b == c || a == c {
                return Err(Error::Format(format!("clause {k} repeats a variable")));
            }
            out.push(clause);
        }
        Ok(Self {
            num_vars,
            clauses: out,
        })
    }

    /// From one-based signed literals.
    pub fn from_signed(num_vars: usize, clauses: &[[i64; 3]]) -> Result<Self> {
        let lits = clauses
            .iter()
            .map(|c| c.iter().map(|&v| Literal::from_signed(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(num_vars, lits)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn satisfied_count(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|l| l.eval(assignment)))
            .count()
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.satisfied_count(assignment) == self.clauses.len()
    }

    /// Occurrence count of each variable.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut g = vec![0; self.num_vars];
        for l in self.clauses.iter().flatten() {
            g[l.var] += 1;
        }
        g
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let v = l.var as i64 + 1;
                s.push_str(&format!("{} ", if l.negated { -v } else { v }));
            }
            s.push_str("0\n");
        }
        s
    }
}

impl FromStr for CnfFormula {
    type Err = Error;

    /// Parses DIMACS CNF. Comment lines start with `c`; clauses end with `0`
    /// and may span lines.
    fn from_str(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(Error::Format(format!("line {}: bad problem line", lineno + 1)));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Format(format!("line {}: bad count {s:?}", lineno + 1)))
                };
                header = Some((parse(parts[2])?, parse(parts[3])?));
                continue;
            }
            if header.is_none() {
                return Err(Error::Format("clause before the problem line".into()));
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: bad literal {tok:?}", lineno + 1)))?;
                if v == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(Literal::from_signed(v)?);
                }
            }
        }
        let (vars, count) = header.ok_or_else(|| Error::Format("missing problem line".into()))?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != count {
            return Err(Error::Format(format!(
                "problem line announces {count} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(vars, clauses)
    }
}

/// A reduced instance and the constants needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance {
    pub instance: RegressionInstance,
    pub tau: f64,
    /// The loss value on the flat region.
    pub flat_value: f64,
    pub clauses: usize,
}

impl HardInstance {
    /// `5 C m`, the objective of any satisfying assignment.
    pub fn satisfiable_cost(&self) -> f64 {
        5.0 * self.flat_value * self.clauses as f64
    }

    pub fn manifest(&self) -> HardnessManifest {
        HardnessManifest {
            variables: self.instance.ncols(),
            clauses: self.clauses,
            rows: self.instance.nrows(),
            tau: self.tau,
            flat_value: self.flat_value,
            satisfiable_cost: self.satisfiable_cost(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardnessManifest {
    pub variables: usize,
    pub clauses: usize,
    pub rows: usize,
    pub tau: f64,
    pub flat_value: f64,
    pub satisfiable_cost: f64,
}

/// Builds the `9m x d` instance. The loss must be flat from `tau` on, which
/// holds when its own threshold is at most `tau`.
pub fn reduce_to_regression(phi: &CnfFormula, tau: f64, loss: &LossSpec) -> Result<HardInstance> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    if loss.tau() > tau {
        return Err(Error::Parameter(format!(
            "loss threshold {} exceeds the reduction threshold {tau}",
            loss.tau()
        )));
    }
    let d = phi.num_vars;
    let occ = phi.occurrences();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(9 * phi.num_clauses());
    let mut b = Vec::with_capacity(rows.capacity());
    for (i, &g) in occ.iter().enumerate() {
        for target in [0.0, 10.0 * tau] {
            for _ in 0..g {
                rows.push(vec![(i, 1.0)]);
                b.push(target);
            }
        }
    }
    for clause in &phi.clauses {
        let mut entries: Vec<(usize, f64)> = clause
            .iter()
            .map(|l| (l.var, if l.negated { -1.0 } else { 1.0 }))
            .collect();
        entries.sort_by_key(|e| e.0);
        let negatives = clause.iter().filter(|l| l.negated).count() as f64;
        for k in [10.0, 20.0, 30.0] {
            rows.push(entries.clone());
            b.push(k * tau - 10.0 * tau * negatives);
        }
    }
    let a = Mat::csr_from_rows(d, rows)?;
    Ok(HardInstance {
        instance: RegressionInstance::new(a, b)?,
        tau,
        flat_value: loss.flat_value(),
        clauses: phi.num_clauses(),
    })
}

/// `x_i = 10 tau` for true variables and 0 otherwise.
pub fn assignment_to_point(v: &[bool], tau: f64) -> Vec<f64> {
    v.iter().map(|&t| if t { 10.0 * tau } else { 0.0 }).collect()
}

/// `v_i` is true exactly when `x_i` lies in `[9 tau, 11 tau]`; everything
/// outside that band rounds to false.
pub fn point_to_assignment(x: &[f64], tau: f64) -> Vec<bool> {
    x.iter().map(|&xi| (9.0 * tau..=11.0 * tau).contains(&xi)).collect()
}

/// A random 3-SAT formula satisfied by a random planted assignment.
pub fn planted_formula(num_vars: usize, num_clauses: usize, seed: u64) -> Result<(CnfFormula, Vec<bool>)> {
    if num_vars < 3 {
        return Err(Error::Parameter("a 3-SAT formula needs at least 3 variables".into()));
    }
    let mut rng = rng_from(seed, &[tag("planted")]);
    let truth: Vec<bool> = (0..num_vars).map(|_| rng.random()).collect();
    let mut clauses = Vec::with_capacity(num_clauses);
    while clauses.len() < num_clauses {
        let clause: Vec<Literal> = sample(&mut rng, num_vars, 3)
            .into_iter()
            .map(|var| Literal {
                var,
                negated: rng.random(),
            })
            .collect();
        if clause.iter().any(|l| l.eval(&truth)) {
            clauses.push(clause);
        }
    }
    Ok((CnfFormula::new(num_vars, clauses)?, truth))
}
