//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use strategize_core::{Game, MixedStrategy, Role};

/// Brute-force Stackelberg value over the simplex grid with step
/// `1 / resolution`: every best response is tried (optimistic ties).
pub fn stackelberg_grid_oracle(game: &Game, resolution: usize) -> f64 {
    let m = game.num_optimizer_actions();
    let n = game.num_learner_actions();
    let mut best = f64::NEG_INFINITY;
    for alpha in grid(m, resolution) {
        let ul: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|a| alpha[a] * game.payoff(Role::Learner, a, j)).sum())
            .collect();
        let top = ul.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..n {
            if ul[j] >= top - 1e-12 {
                let uo: f64 = (0..m).map(|a| alpha[a] * game.payoff(Role::Optimizer, a, j)).sum();
                best = best.max(uo);
            }
        }
    }
    best
}

/// Simplex grid points, written out independently of the library.
pub fn grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, res: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == dim - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&c| c as f64 / res as f64).collect());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(dim, left - c, res, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, resolution, resolution, &mut Vec::new(), &mut out);
    out
}

/// Per-action data for the control oracle: learner and optimizer column
/// utilities of a mixed strategy.
#[derive(Clone, Debug)]
pub struct Columns {
    pub learner: Vec<f64>,
    pub optimizer: Vec<f64>,
}

pub fn columns(game: &Game, alpha: &[f64]) -> Columns {
    let m = game.num_optimizer_actions();
    let n = game.num_learner_actions();
    let col = |role: Role, j: usize| (0..m).map(|a| alpha[a] * game.payoff(role, a, j)).sum();
    Columns {
        learner: (0..n).map(|j| col(Role::Learner, j)).collect(),
        optimizer: (0..n).map(|j| col(Role::Optimizer, j)).collect(),
    }
}

/// One step of the control oracle in full (unreduced) learner utilities,
/// started at `state`. Every pairwise crossing time is a breakpoint; on each
/// interval the leading set is read off at the midpoint and the
/// optimizer-best leader (lowest index on ties) labels it. Appends
/// `(label, duration, utility)` pieces and returns the end state.
pub fn oracle_step(
    state: &[f64],
    cols: &Columns,
    duration: f64,
    pieces: &mut Vec<(usize, f64, f64)>,
) -> Vec<f64> {
    let n = state.len();
    let at = |s: f64, j: usize| state[j] + s * cols.learner[j];
    let mut cuts = vec![0.0, duration];
    for a in 0..n {
        for b in a + 1..n {
            let rel = cols.learner[a] - cols.learner[b];
            if rel != 0.0 {
                let s = (state[b] - state[a]) / rel;
                if s > 0.0 && s < duration {
                    cuts.push(s);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let top = (0..n).map(|j| at(mid, j)).fold(f64::NEG_INFINITY, f64::max);
        let scale = 1.0 + top.abs();
        let mut label = usize::MAX;
        for j in 0..n {
            if at(mid, j) >= top - 1e-9 * scale
                && (label == usize::MAX || cols.optimizer[j] > cols.optimizer[label])
            {
                label = j;
            }
        }
        pieces.push((label, len, cols.optimizer[label]));
    }
    (0..n).map(|j| at(duration, j)).collect()
}

/// Oracle value of a policy from `start` (full coordinates) and its number of
/// labeled pieces after merging equal neighbours.
pub fn oracle_evaluate(game: &Game, steps: &[(Vec<f64>, f64)], start: &[f64]) -> (f64, usize, Vec<f64>) {
    let mut pieces = Vec::new();
    let mut state = start.to_vec();
    for (alpha, t) in steps {
        if *t > 0.0 {
            state = oracle_step(&state, &columns(game, alpha), *t, &mut pieces);
        }
    }
    let total: f64 = pieces.iter().map(|p| p.1).sum();
    let value = pieces.iter().map(|p| p.1 * p.2).sum::<f64>() / total;
    let mut count = 0;
    let mut last = usize::MAX;
    for p in &pieces {
        if p.0 != last {
            count += 1;
            last = p.0;
        }
    }
    (value, count, state)
}

/// Best value over 2-step policies from the origin with strategies on the
/// `1 / resolution` simplex grid and `t_1 in {0, 1/resolution, ..., 1}`,
/// restricted to policies whose merged labeling has at most two pieces.
pub fn two_step_grid_oracle(game: &Game, resolution: usize) -> f64 {
    let n = game.num_learner_actions();
    let points: Vec<Columns> = grid(game.num_optimizer_actions(), resolution)
        .iter()
        .map(|a| columns(game, a))
        .collect();
    let origin = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    let mut pieces = Vec::with_capacity(8);
    for first in &points {
        for k in 0..=resolution {
            let t1 = k as f64 / resolution as f64;
            let t2 = 1.0 - t1;
            pieces.clear();
            let mid = if t1 > 0.0 {
                oracle_step(&origin, first, t1, &mut pieces)
            } else {
                origin.clone()
            };
            let head = pieces.len();
            let head_value: f64 = pieces.iter().map(|p| p.1 * p.2).sum();
            for second in &points {
                if t2 == 0.0 && !std::ptr::eq(second, &points[0]) {
                    break;
                }
                pieces.truncate(head);
                if t2 > 0.0 {
                    oracle_step(&mid, second, t2, &mut pieces);
                }
                let mut count = 0;
                let mut last = usize::MAX;
                for p in pieces.iter() {
                    if p.0 != last {
                        count += 1;
                        last = p.0;
                    }
                }
                if count > 2 {
                    continue;
                }
                let value = head_value + pieces[head..].iter().map(|p| p.1 * p.2).sum::<f64>();
                if value > best {
                    best = value;
                }
            }
        }
    }
    best
}

pub fn mixed(p: &[f64]) -> MixedStrategy {
    MixedStrategy::new(p.to_vec()).unwrap()
}
