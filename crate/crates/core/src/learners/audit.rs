//! Regret audits over recorded traces. All functions are pure.

use serde::{Deserialize, Serialize};

use super::{check_arms, LearnerError, RewardTrace};

/// A remapping `π: [K] → [K]` of the learner's arms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapFunction {
    pub mapping: Vec<usize>,
}

impl SwapFunction {
    pub fn identity(num_arms: usize) -> Self {
        SwapFunction { mapping: (0..num_arms).collect() }
    }

    /// Maps every arm to `target`.
    pub fn constant(num_arms: usize, target: usize) -> Self {
        SwapFunction { mapping: vec![target; num_arms] }
    }

    pub fn apply(&self, arm: usize) -> usize {
        self.mapping[arm]
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// Realized external regret `max_i σ_{i,T} − Σ_t r_{i_t,t}`.
pub fn regret(trace: &RewardTrace) -> f64 {
    let best = max_of(&trace.totals());
    let earned: f64 = trace.rewards().iter().zip(trace.chosen()).map(|(r, &c)| r[c]).sum();
    best - earned
}

/// External regret against the play distributions instead of the pulled arms.
pub fn expected_regret(trace: &RewardTrace) -> Result<f64, LearnerError> {
    let probs = distributions(trace)?;
    let best = max_of(&trace.totals());
    let earned: f64 = trace.rewards().iter().zip(probs).map(|(r, p)| dot(r, p)).sum();
    Ok(best - earned)
}

/// Realized gain of replaying the trace with every pull of `i` replaced by `π(i)`.
pub fn regret_under(trace: &RewardTrace, swap: &SwapFunction) -> Result<f64, LearnerError> {
    check_arms(trace.num_arms(), swap.mapping.len())?;
    if let Some(&bad) = swap.mapping.iter().find(|&&j| j >= trace.num_arms()) {
        return Err(LearnerError::Trace(format!("swap target {bad} out of range")));
    }
    Ok(trace
        .rewards()
        .iter()
        .zip(trace.chosen())
        .map(|(r, &c)| r[swap.apply(c)] - r[c])
        .sum())
}

/// Realized swap regret and a maximizing `π`. The maximum over all `K^K`
/// functions decomposes by source arm, so each arm independently picks its
/// best replacement over the rounds it was pulled.
pub fn swap_regret(trace: &RewardTrace) -> (f64, SwapFunction) {
    let k = trace.num_arms();
    let mut gains = vec![vec![0.0; k]; k];
    for (r, &c) in trace.rewards().iter().zip(trace.chosen()) {
        for j in 0..k {
            gains[c][j] += r[j] - r[c];
        }
    }
    best_swap(&gains)
}

/// Swap regret of the play distributions: arm `i`'s rows are weighted by the
/// probability it was played.
pub fn expected_swap_regret(trace: &RewardTrace) -> Result<(f64, SwapFunction), LearnerError> {
    let probs = distributions(trace)?;
    let k = trace.num_arms();
    let mut gains = vec![vec![0.0; k]; k];
    for (r, p) in trace.rewards().iter().zip(probs) {
        accumulate_expected(&mut gains, r, p);
    }
    Ok(best_swap(&gains))
}

fn accumulate_expected(gains: &mut [Vec<f64>], r: &[f64], p: &[f64]) {
    for (i, row) in gains.iter_mut().enumerate() {
        if p[i] == 0.0 {
            continue;
        }
        for j in 0..r.len() {
            row[j] += p[i] * (r[j] - r[i]);
        }
    }
}

// gains[i][j]: total gain of sending source i to j. Identity kept on ties.
fn best_swap(gains: &[Vec<f64>]) -> (f64, SwapFunction) {
    let mut total = 0.0;
    let mut mapping = Vec::with_capacity(gains.len());
    for (i, row) in gains.iter().enumerate() {
        let mut best = i;
        for (j, &g) in row.iter().enumerate() {
            if g > row[best] {
                best = j;
            }
        }
        total += row[best];
        mapping.push(best);
    }
    (total, SwapFunction { mapping })
}

/// One `(round, arm)` pair breaking the mean-based condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based round.
    pub round: usize,
    pub arm: usize,
    pub prob: f64,
    /// How far the arm trailed the leader before the round.
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanBasedReport {
    pub gamma: f64,
    pub horizon: usize,
    pub violations: Vec<Violation>,
}

impl MeanBasedReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the `gamma`-mean-based condition with `T` the trace length: on
/// round `t`, any arm trailing the leader by more than `gamma T` in the
/// cumulative rewards of rounds `1..t` must be played with probability at
/// most `gamma`.
pub fn mean_based_audit(trace: &RewardTrace, gamma: f64) -> Result<MeanBasedReport, LearnerError> {
    let probs = distributions(trace)?;
    let slack = gamma * trace.len() as f64;
    let k = trace.num_arms();
    let zeros = vec![0.0; k];
    let mut violations = Vec::new();
    for (t, p) in probs.iter().enumerate() {
        let sigma = if t == 0 { &zeros } else { &trace.cumulative()[t - 1] };
        let top = max_of(sigma);
        for i in 0..k {
            if sigma[i] < top - slack && p[i] > gamma {
                violations.push(Violation {
                    round: t + 1,
                    arm: i,
                    prob: p[i],
                    deficit: top - sigma[i],
                });
            }
        }
    }
    Ok(MeanBasedReport {
        gamma,
        horizon: trace.len(),
        violations,
    })
}

/// Streaming version of the trace audits for runs that keep no trace.
#[derive(Debug, Clone)]
pub struct RegretAccumulator {
    totals: Vec<f64>,
    earned: f64,
    expected_earned: f64,
    gains: Vec<Vec<f64>>,
    expected_gains: Vec<Vec<f64>>,
    rounds: usize,
}

impl RegretAccumulator {
    pub fn new(num_arms: usize) -> Self {
        RegretAccumulator {
            totals: vec![0.0; num_arms],
            earned: 0.0,
            expected_earned: 0.0,
            gains: vec![vec![0.0; num_arms]; num_arms],
            expected_gains: vec![vec![0.0; num_arms]; num_arms],
            rounds: 0,
        }
    }

    pub fn push(&mut self, rewards: &[f64], chosen: usize, probs: &[f64]) {
        for (s, r) in self.totals.iter_mut().zip(rewards) {
            *s += r;
        }
        self.earned += rewards[chosen];
        self.expected_earned += dot(rewards, probs);
        for j in 0..rewards.len() {
            self.gains[chosen][j] += rewards[j] - rewards[chosen];
        }
        accumulate_expected(&mut self.expected_gains, rewards, probs);
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn regret(&self) -> f64 {
        max_of(&self.totals) - self.earned
    }

    pub fn expected_regret(&self) -> f64 {
        max_of(&self.totals) - self.expected_earned
    }

    pub fn swap_regret(&self) -> (f64, SwapFunction) {
        best_swap(&self.gains)
    }

    pub fn expected_swap_regret(&self) -> (f64, SwapFunction) {
        best_swap(&self.expected_gains)
    }
}

fn distributions(trace: &RewardTrace) -> Result<&[Vec<f64>], LearnerError> {
    trace
        .distributions()
        .ok_or_else(|| LearnerError::Trace("trace has no recorded play distributions".into()))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
