//! Lower-bound search for the control problem.
//!
//! For a fixed sequence of region labels `j_1..j_k`, write `y_i = t_i alpha_i`.
//! Waypoints and the objective `sum_i t_i u_O(alpha_i, b_{j_i})` are linear in
//! `y`, and so are the region-membership constraints on the waypoints. With
//! durations normalized to `sum_i t_i = 1`, the best policy for the labels is
//! one LP, solved exactly over continuous strategies. Cycles add a free start
//! `P` and the closure `P_k = lambda P` for each `lambda` on a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::ControlState;
use super::path::{certify_cycle, merge, subdivide};
use super::ControlError;
use crate::game::{Game, MixedStrategy, Role};
use crate::lp::{Bounds, LinearProgram, Sense};
use crate::optimizers::{Policy, PolicyStep};

/// Steps shorter than this are dropped from LP solutions.
const MIN_DURATION: f64 = 1e-12;
/// A later candidate must beat the incumbent by this much to replace it.
const IMPROVEMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Longest label sequence tried.
    pub max_steps: usize,
    /// Cycle ratios are `1 + i / lambda_resolution` up to `lambda_max`.
    pub lambda_resolution: usize,
    pub lambda_max: f64,
    pub paths: bool,
    pub cycles: bool,
}

impl SearchOptions {
    pub fn new(max_steps: usize, lambda_resolution: usize) -> Self {
        SearchOptions {
            max_steps,
            lambda_resolution,
            lambda_max: 4.0,
            paths: true,
            cycles: true,
        }
    }

    pub fn paths_only(mut self) -> Self {
        self.cycles = false;
        self
    }

    pub fn cycles_only(mut self) -> Self {
        self.paths = false;
        self
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let r = self.lambda_resolution as f64;
        let count = ((self.lambda_max - 1.0) * r + 1e-9).floor() as usize;
        (0..=count).map(|i| 1.0 + i as f64 / r).collect()
    }

    fn validate(&self) -> Result<(), ControlError> {
        if self.max_steps == 0 {
            return Err(ControlError::Options("max_steps must be at least 1".into()));
        }
        if self.lambda_resolution < 2 {
            return Err(ControlError::Options("grid resolution must be at least 2".into()));
        }
        if !(self.lambda_max >= 1.0) {
            return Err(ControlError::Options(format!("lambda_max {} below 1", self.lambda_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    /// Run once from the origin.
    Path,
    /// Run from `start` to `lambda * start`, repeated.
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub value: f64,
    pub kind: CertificateKind,
    /// Canonical (merged) policy.
    pub policy: Policy,
    pub start: ControlState,
    pub lambda: f64,
    pub waypoints: Vec<ControlState>,
    pub labels: Vec<usize>,
}

/// Search with label sequences up to `max_steps` long over paths and cycles,
/// cycle ratios on a `1 / grid_resolution` grid over `[1, 4]`. The value is a
/// certified lower bound on the control optimum, not a claim of optimality.
pub fn search(game: &Game, max_steps: usize, grid_resolution: usize) -> Result<SearchResult, ControlError> {
    search_with(game, &SearchOptions::new(max_steps, grid_resolution))
}

pub fn search_with(game: &Game, options: &SearchOptions) -> Result<SearchResult, ControlError> {
    options.validate()?;
    let n = game.num_learner_actions();
    let sequences = label_sequences(n, options.max_steps);
    let mut tasks: Vec<(usize, Option<f64>)> = Vec::new();
    if options.paths {
        tasks.extend((0..sequences.len()).map(|s| (s, None)));
    }
    if options.cycles {
        let lambdas = options.lambdas();
        for s in 0..sequences.len() {
            tasks.extend(lambdas.iter().map(|&l| (s, Some(l))));
        }
    }
    let data = GameData::new(game);
    let candidates: Vec<Option<SearchResult>> = tasks
        .par_iter()
        .map(|&(s, lambda)| solve_sequence(game, &data, &sequences[s], lambda))
        .collect();
    let mut best = pick_best(candidates);
    if best.is_none() && !options.paths {
        let singles: Vec<_> = (0..n).map(|j| solve_sequence(game, &data, &[j], None)).collect();
        best = pick_best(singles);
    }
    best.ok_or_else(|| ControlError::Options("no feasible policy found".into()))
}

fn pick_best(candidates: Vec<Option<SearchResult>>) -> Option<SearchResult> {
    let mut best: Option<SearchResult> = None;
    for c in candidates.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| c.value > b.value + IMPROVEMENT_TOL) {
            best = Some(c);
        }
    }
    best
}

/// Sequences over `0..n` of length `1..=max_len` with distinct neighbours,
/// shorter first, lexicographic within a length.
fn label_sequences(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut layer: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    for _ in 0..max_len {
        out.extend(layer.iter().cloned());
        let mut next = Vec::new();
        for seq in &layer {
            let last = *seq.last().expect("non-empty");
            for j in (0..n).filter(|&j| j != last) {
                let mut s = seq.clone();
                s.push(j);
                next.push(s);
            }
        }
        layer = next;
    }
    out
}

struct GameData {
    m: usize,
    /// `d[r][a]`: reduced displacement coordinate `r` of pure action `a`.
    d: Vec<Vec<f64>>,
}

impl GameData {
    fn new(game: &Game) -> Self {
        let m = game.num_optimizer_actions();
        let n = game.num_learner_actions();
        let d = (0..n - 1)
            .map(|r| {
                (0..m)
                    .map(|a| game.payoff(Role::Learner, a, r) - game.payoff(Role::Learner, a, n - 1))
                    .collect()
            })
            .collect();
        GameData { m, d }
    }
}

fn solve_sequence(
    game: &Game,
    data: &GameData,
    labels: &[usize],
    lambda: Option<f64>,
) -> Option<SearchResult> {
    let m = data.m;
    let dims = data.d.len();
    let k = labels.len();
    let y = |i: usize, a: usize| i * m + a;
    let p_var = |r: usize| k * m + r;
    let z_var = |a: usize| k * m + dims + a;
    let reachability = lambda == Some(1.0);
    let num_vars = match lambda {
        None => k * m,
        Some(_) if reachability => k * m + dims + m,
        Some(_) => k * m + dims,
    };

    let mut objective = vec![0.0; num_vars];
    for (i, &j) in labels.iter().enumerate() {
        for a in 0..m {
            objective[y(i, a)] = game.payoff(Role::Optimizer, a, j);
        }
    }
    let mut lp = LinearProgram::maximize(objective);
    if lambda.is_some() {
        for r in 0..dims {
            lp.set_bounds(p_var(r), Bounds::FREE);
        }
    }
    let mut total = vec![0.0; num_vars];
    total[..k * m].fill(1.0);
    lp.add_constraint(total, Sense::Eq, 1.0);

    // Coordinate r of waypoint i as a linear form.
    let coordinate = |i: usize, r: usize| {
        let mut c = vec![0.0; num_vars];
        if lambda.is_some() {
            c[p_var(r)] = 1.0;
        }
        for l in 0..i {
            for a in 0..m {
                c[y(l, a)] += data.d[r][a];
            }
        }
        c
    };
    for (i, &j) in labels.iter().enumerate() {
        for w in [i, i + 1] {
            if w == 0 && lambda.is_none() {
                continue;
            }
            let x: Vec<Vec<f64>> = (0..dims).map(|r| coordinate(w, r)).collect();
            if j < dims {
                for r in (0..dims).filter(|&r| r != j) {
                    let diff: Vec<f64> = x[j].iter().zip(&x[r]).map(|(a, b)| a - b).collect();
                    lp.add_constraint(diff, Sense::Ge, 0.0);
                }
                lp.add_constraint(x[j].clone(), Sense::Ge, 0.0);
            } else {
                for row in x {
                    lp.add_constraint(row, Sense::Le, 0.0);
                }
            }
        }
    }
    if let Some(lambda) = lambda {
        for r in 0..dims {
            let mut c = coordinate(k, r);
            c[p_var(r)] -= lambda;
            lp.add_constraint(c, Sense::Eq, 0.0);
        }
        if reachability {
            for r in 0..dims {
                let mut c = vec![0.0; num_vars];
                c[p_var(r)] = 1.0;
                for a in 0..m {
                    c[z_var(a)] = -data.d[r][a];
                }
                lp.add_constraint(c, Sense::Eq, 0.0);
            }
        }
    }

    let solution = lp.solve().ok()?;
    let mut steps = Vec::with_capacity(k);
    for i in 0..k {
        let weights: Vec<f64> = (0..m).map(|a| solution.x[y(i, a)].max(0.0)).collect();
        let t: f64 = weights.iter().sum();
        if t > MIN_DURATION {
            steps.push(PolicyStep::new(MixedStrategy::from_weights(&weights).ok()?, t));
        }
    }
    let policy = Policy::new(steps).ok()?;
    match lambda {
        None => {
            let annotated = merge(&subdivide(&policy, game).ok()?);
            Some(SearchResult {
                value: annotated.value(),
                kind: CertificateKind::Path,
                policy: annotated.to_policy().ok()?,
                start: annotated.start().clone(),
                lambda: 1.0,
                labels: annotated.labels(),
                waypoints: annotated.waypoints,
            })
        }
        Some(_) => {
            let start = ControlState((0..dims).map(|r| solution.x[p_var(r)]).collect());
            let cert = certify_cycle(&policy, &start, game).ok()?;
            let annotated = merge(&cert.annotated);
            Some(SearchResult {
                value: cert.value,
                kind: CertificateKind::Cycle,
                policy: annotated.to_policy().ok()?,
                start,
                lambda: cert.lambda,
                labels: annotated.labels(),
                waypoints: annotated.waypoints,
            })
        }
    }
}
