//! Dense two-phase simplex for the small linear programs used across the crate.
//!
//! Problems are stated as `maximize c·x` subject to row constraints and
//! per-variable bounds. Pivoting follows Bland's rule, so the degenerate
//! vertices that integer-valued games produce all the time cannot cycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for feasibility of rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const REDUCED_COST_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex hit the iteration limit ({0} pivots)")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Closed interval a variable must lie in. Either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NONNEGATIVE: Bounds = Bounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const FREE: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Self {
        Bounds { lower, upper }
    }
}

/// `maximize objective·x` subject to `constraint_matrix[i]·x (sense[i]) constraint_bounds[i]`
/// and `bounds[j].lower <= x[j] <= bounds[j].upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraint_matrix: Vec<Vec<f64>>,
    pub constraint_bounds: Vec<f64>,
    pub senses: Vec<Sense>,
    pub bounds: Vec<Bounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// New maximization problem; all variables default to `x >= 0`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraint_matrix: Vec::new(),
            constraint_bounds: Vec::new(),
            senses: Vec::new(),
            bounds: vec![Bounds::NONNEGATIVE; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraint_matrix.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> &mut Self {
        self.constraint_matrix.push(coeffs);
        self.senses.push(sense);
        self.constraint_bounds.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, bounds: Bounds) -> &mut Self {
        self.bounds[var] = bounds;
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_constraints();
        if self.constraint_bounds.len() != m || self.senses.len() != m {
            return Err(LpError::Malformed(format!(
                "{m} constraint rows but {} right-hand sides and {} senses",
                self.constraint_bounds.len(),
                self.senses.len()
            )));
        }
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{n} variables but {} bounds",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (i, row) in self.constraint_matrix.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) || !self.constraint_bounds[i].is_finite() {
                return Err(LpError::Malformed(format!("row {i} is not finite")));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper {
                return Err(LpError::Malformed(format!("variable {j} has bounds {b:?}")));
            }
            if b.lower == f64::INFINITY || b.upper == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable {j} has bounds {b:?}")));
            }
        }
        Ok(())
    }

    /// Solves the program with a two-phase dense simplex.
    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.validate()?;
        let standard = StandardForm::build(self);
        let values = standard.solve()?;
        let x = standard.recover(&values);
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }
}

/// How an original variable is expressed through nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + col
    Shift { offset: f64, col: usize },
    /// x = offset - col
    Reflect { offset: f64, col: usize },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    maps: Vec<VarMap>,
    num_cols: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    senses: Vec<Sense>,
    cost: Vec<f64>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut maps = Vec::with_capacity(lp.num_vars());
        let mut num_cols = 0;
        let mut upper_rows: Vec<(usize, f64)> = Vec::new();
        for b in &lp.bounds {
            if b.lower.is_finite() {
                let col = num_cols;
                num_cols += 1;
                if b.upper.is_finite() {
                    upper_rows.push((col, b.upper - b.lower));
                }
                maps.push(VarMap::Shift {
                    offset: b.lower,
                    col,
                });
            } else if b.upper.is_finite() {
                maps.push(VarMap::Reflect {
                    offset: b.upper,
                    col: num_cols,
                });
                num_cols += 1;
            } else {
                maps.push(VarMap::Split {
                    pos: num_cols,
                    neg: num_cols + 1,
                });
                num_cols += 2;
            }
        }

        let mut cost = vec![0.0; num_cols];
        for (c, map) in lp.objective.iter().zip(&maps) {
            match *map {
                VarMap::Shift { col, .. } => cost[col] += c,
                VarMap::Reflect { col, .. } => cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }

        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut senses = Vec::new();
        for ((coeffs, &b), &sense) in lp
            .constraint_matrix
            .iter()
            .zip(&lp.constraint_bounds)
            .zip(&lp.senses)
        {
            let mut row = vec![0.0; num_cols];
            let mut r = b;
            for (a, map) in coeffs.iter().zip(&maps) {
                match *map {
                    VarMap::Shift { offset, col } => {
                        row[col] += a;
                        r -= a * offset;
                    }
                    VarMap::Reflect { offset, col } => {
                        row[col] -= a;
                        r -= a * offset;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            rows.push(row);
            rhs.push(r);
            senses.push(sense);
        }
        for (col, width) in upper_rows {
            let mut row = vec![0.0; num_cols];
            row[col] = 1.0;
            rows.push(row);
            rhs.push(width);
            senses.push(Sense::Le);
        }

        StandardForm {
            maps,
            num_cols,
            rows,
            rhs,
            senses,
            cost,
        }
    }

    fn recover(&self, values: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|map| match *map {
                VarMap::Shift { offset, col } => offset + values[col],
                VarMap::Reflect { offset, col } => offset - values[col],
                VarMap::Split { pos, neg } => values[pos] - values[neg],
            })
            .collect()
    }

    /// Returns optimal values of the standard-form columns.
    fn solve(&self) -> Result<Vec<f64>, LpError> {
        let m = self.rows.len();
        let n = self.num_cols;
        if m == 0 {
            // Only sign constraints: optimum at zero unless some cost is positive.
            if self.cost.iter().any(|&c| c > REDUCED_COST_TOL) {
                return Err(LpError::Unbounded);
            }
            return Ok(vec![0.0; n]);
        }

        // Normalize to nonnegative right-hand sides.
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let mut senses = self.senses.clone();
        for i in 0..m {
            if rhs[i] < 0.0 {
                rows[i].iter_mut().for_each(|a| *a = -*a);
                rhs[i] = -rhs[i];
                senses[i] = match senses[i] {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
        }

        let num_slack = senses.iter().filter(|s| **s != Sense::Eq).count();
        let num_art = senses.iter().filter(|s| **s != Sense::Le).count();
        let art_start = n + num_slack;
        let width = art_start + num_art;

        let mut tab = Tableau {
            a: vec![vec![0.0; width]; m],
            rhs,
            basis: vec![0; m],
            obj: vec![0.0; width],
            active: vec![true; width],
            pivots: 0,
            limit: 20_000 + 100 * (m + width),
        };
        let mut slack = n;
        let mut art = art_start;
        for i in 0..m {
            tab.a[i][..n].copy_from_slice(&rows[i]);
            match senses[i] {
                Sense::Le => {
                    tab.a[i][slack] = 1.0;
                    tab.basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    tab.a[i][slack] = -1.0;
                    slack += 1;
                    tab.a[i][art] = 1.0;
                    tab.basis[i] = art;
                    art += 1;
                }
                Sense::Eq => {
                    tab.a[i][art] = 1.0;
                    tab.basis[i] = art;
                    art += 1;
                }
            }
        }

        if num_art > 0 {
            // Phase 1: maximize -(sum of artificials).
            let mut cost = vec![0.0; width];
            cost[art_start..].iter_mut().for_each(|c| *c = -1.0);
            tab.price(&cost);
            tab.run()?;
            let infeasibility: f64 = tab
                .basis
                .iter()
                .zip(&tab.rhs)
                .filter(|(b, _)| **b >= art_start)
                .map(|(_, r)| *r)
                .sum();
            let scale = 1.0 + tab.rhs.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
            if infeasibility > FEASIBILITY_TOL * scale {
                return Err(LpError::Infeasible);
            }
            // Drive remaining (zero-level) artificials out of the basis.
            let mut redundant = Vec::new();
            for i in 0..m {
                if tab.basis[i] < art_start {
                    continue;
                }
                let col = (0..art_start).find(|&j| tab.a[i][j].abs() > 1e-9);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => redundant.push(i),
                }
            }
            for &i in redundant.iter().rev() {
                tab.a.remove(i);
                tab.rhs.remove(i);
                tab.basis.remove(i);
            }
            for j in art_start..width {
                tab.active[j] = false;
            }
        }

        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.cost);
        tab.price(&cost);
        tab.run()?;

        let mut values = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                values[b] = tab.rhs[i].max(0.0);
            }
        }
        Ok(values)
    }
}

struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of a maximization objective.
    obj: Vec<f64>,
    active: Vec<bool>,
    pivots: usize,
    limit: usize,
}

impl Tableau {
    fn price(&mut self, cost: &[f64]) {
        self.obj.copy_from_slice(cost);
        for (row, &b) in self.a.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, a) in self.obj.iter_mut().zip(row) {
                    *o -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        self.pivots += 1;
        let p = self.a[r][e];
        self.a[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        let pivot_row = self.a[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][e];
            if f != 0.0 {
                for (v, pv) in self.a[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.a[i][e] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -FEASIBILITY_TOL {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving variable on ties.
    fn run(&mut self) -> Result<(), LpError> {
        loop {
            if self.pivots > self.limit {
                return Err(LpError::IterationLimit(self.pivots));
            }
            let entering = (0..self.obj.len())
                .find(|&j| self.active[j] && self.obj[j] > REDUCED_COST_TOL);
            let Some(e) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let a = self.a[i][e];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if (tie && self.basis[i] < self.basis[best]) || (!tie && ratio < best_ratio) {
                            Some((i, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return Err(LpError::Unbounded),
            }
        }
    }
}
