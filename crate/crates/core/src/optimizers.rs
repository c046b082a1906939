//! Optimizer-side play: the conservative commitment, scripted policies, and
//! their conversion into per-round schedules.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, GameError, MixedStrategy};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("{rounds} rounds cannot hold a policy with {steps} steps")]
    TooFewRounds { rounds: usize, steps: usize },
    #[error("policy strategies cover {got} actions, game has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStep {
    pub alpha: MixedStrategy,
    #[serde(rename = "t")]
    pub duration: f64,
}

impl PolicyStep {
    pub fn new(alpha: MixedStrategy, duration: f64) -> Self {
        PolicyStep { alpha, duration }
    }
}

/// A sequence of `(alpha_i, t_i)` pairs: play `alpha_i` for a `t_i` share of
/// the rounds. Durations need not sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyFile", into = "PolicyFile")]
pub struct Policy {
    steps: Vec<PolicyStep>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    steps: Vec<PolicyStep>,
}

impl TryFrom<PolicyFile> for Policy {
    type Error = OptimizerError;

    fn try_from(f: PolicyFile) -> Result<Self, Self::Error> {
        Policy::new(f.steps)
    }
}

impl From<Policy> for PolicyFile {
    fn from(p: Policy) -> Self {
        PolicyFile { steps: p.steps }
    }
}

impl Policy {
    pub fn new(steps: Vec<PolicyStep>) -> Result<Self, OptimizerError> {
        let Some(first) = steps.first() else {
            return Err(OptimizerError::InvalidPolicy("no steps".into()));
        };
        let m = first.alpha.len();
        for (i, s) in steps.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration >= 0.0) {
                return Err(OptimizerError::InvalidPolicy(format!(
                    "step {i} has duration {}",
                    s.duration
                )));
            }
            if s.alpha.len() != m {
                return Err(OptimizerError::Dimension { expected: m, got: s.alpha.len() });
            }
        }
        let total: f64 = steps.iter().map(|s| s.duration).sum();
        if !(total > 0.0) {
            return Err(OptimizerError::InvalidPolicy("total duration must be positive".into()));
        }
        Ok(Policy { steps })
    }

    pub fn from_json_str(s: &str) -> Result<Self, OptimizerError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OptimizerError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn steps(&self) -> &[PolicyStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    /// Every duration multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, OptimizerError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(OptimizerError::InvalidPolicy(format!("scale factor {factor}")));
        }
        Policy::new(
            self.steps
                .iter()
                .map(|s| PolicyStep::new(s.alpha.clone(), s.duration * factor))
                .collect(),
        )
    }

    /// Durations rescaled to total one.
    pub fn normalized(&self) -> Self {
        let total = self.total_duration();
        Policy {
            steps: self
                .steps
                .iter()
                .map(|s| PolicyStep::new(s.alpha.clone(), s.duration / total))
                .collect(),
        }
    }

    pub fn check_game(&self, game: &Game) -> Result<(), OptimizerError> {
        let m = game.num_optimizer_actions();
        let got = self.steps[0].alpha.len();
        if got != m {
            return Err(OptimizerError::Dimension { expected: m, got });
        }
        Ok(())
    }
}

/// Non-adaptive optimizer play as runs of identical rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSchedule {
    blocks: Vec<(MixedStrategy, usize)>,
}

impl RoundSchedule {
    /// Drops empty blocks. Fails if no rounds remain.
    pub fn from_blocks(blocks: Vec<(MixedStrategy, usize)>) -> Result<Self, OptimizerError> {
        let blocks: Vec<_> = blocks.into_iter().filter(|(_, n)| *n > 0).collect();
        if blocks.is_empty() {
            return Err(OptimizerError::InvalidPolicy("schedule has no rounds".into()));
        }
        Ok(RoundSchedule { blocks })
    }

    /// `alpha` replayed for `rounds` rounds.
    pub fn constant(alpha: MixedStrategy, rounds: usize) -> Result<Self, OptimizerError> {
        Self::from_blocks(vec![(alpha, rounds)])
    }

    pub fn blocks(&self) -> &[(MixedStrategy, usize)] {
        &self.blocks
    }

    pub fn horizon(&self) -> usize {
        self.blocks.iter().map(|(_, n)| n).sum()
    }

    /// Strategy of 0-based round `t`.
    pub fn strategy_at(&self, t: usize) -> Option<&MixedStrategy> {
        let mut start = 0;
        for (alpha, n) in &self.blocks {
            if t < start + n {
                return Some(alpha);
            }
            start += n;
        }
        None
    }

    /// One entry per round.
    pub fn rounds(&self) -> impl Iterator<Item = &MixedStrategy> + '_ {
        self.blocks
            .iter()
            .flat_map(|(alpha, n)| std::iter::repeat_n(alpha, *n))
    }

    pub fn num_optimizer_actions(&self) -> usize {
        self.blocks[0].0.len()
    }
}

/// The conservative commitment for `delta`, replayed every round.
pub fn commitment_schedule(game: &Game, delta: f64, rounds: usize) -> Result<RoundSchedule, OptimizerError> {
    let commitment = game.conservative_commitment(delta)?;
    RoundSchedule::constant(commitment.strategy, rounds)
}

/// Plays step `i` for `floor(t_i T)` rounds after normalizing durations, then
/// hands leftover rounds one each to the earliest steps. Zero-duration steps
/// are still counted when checking `T` against the number of steps.
pub fn policy_to_schedule(policy: &Policy, rounds: usize) -> Result<RoundSchedule, OptimizerError> {
    let steps = policy.steps();
    if rounds < steps.len() {
        return Err(OptimizerError::TooFewRounds { rounds, steps: steps.len() });
    }
    let total = policy.total_duration();
    let mut counts: Vec<usize> = steps
        .iter()
        .map(|s| ((s.duration / total) * rounds as f64 + 1e-9).floor() as usize)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    // Round-off in the normalization could overshoot by a round.
    while assigned > rounds {
        let i = counts.iter().rposition(|&c| c > 0).expect("some step has rounds");
        counts[i] -= 1;
        assigned -= 1;
    }
    for c in counts.iter_mut().take(rounds - assigned) {
        *c += 1;
    }
    RoundSchedule::from_blocks(steps.iter().map(|s| s.alpha.clone()).zip(counts).collect())
}

/// Top for the first half, Bottom for the second: the exploit of the
/// three-response example game.
pub fn exploit_policy_table1(epsilon: f64) -> Result<Policy, OptimizerError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(OptimizerError::InvalidPolicy(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Policy::new(vec![
        PolicyStep::new(MixedStrategy::pure(2, 0), 0.5),
        PolicyStep::new(MixedStrategy::pure(2, 1), 0.5),
    ])
}

/// What an adaptive optimizer sees before choosing round `round` (0-based).
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub round: usize,
    /// Strategies the optimizer played in earlier rounds.
    pub optimizer_strategies: &'a [MixedStrategy],
    /// Arms the learner pulled in earlier rounds.
    pub learner_actions: &'a [usize],
}

pub type AdaptiveFn = dyn Fn(&History<'_>) -> MixedStrategy + Send + Sync;

/// How the optimizer chooses its round strategies.
#[derive(Clone)]
pub enum OptimizerPlan {
    Schedule(RoundSchedule),
    Adaptive {
        num_actions: usize,
        strategy: Arc<AdaptiveFn>,
    },
}

impl OptimizerPlan {
    pub fn adaptive<F>(num_actions: usize, f: F) -> Self
    where
        F: Fn(&History<'_>) -> MixedStrategy + Send + Sync + 'static,
    {
        OptimizerPlan::Adaptive { num_actions, strategy: Arc::new(f) }
    }

    pub fn num_optimizer_actions(&self) -> usize {
        match self {
            OptimizerPlan::Schedule(s) => s.num_optimizer_actions(),
            OptimizerPlan::Adaptive { num_actions, .. } => *num_actions,
        }
    }
}

impl From<RoundSchedule> for OptimizerPlan {
    fn from(s: RoundSchedule) -> Self {
        OptimizerPlan::Schedule(s)
    }
}

impl fmt::Debug for OptimizerPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerPlan::Schedule(s) => f.debug_tuple("Schedule").field(s).finish(),
            OptimizerPlan::Adaptive { num_actions, .. } => f
                .debug_struct("Adaptive")
                .field("num_actions", num_actions)
                .finish_non_exhaustive(),
        }
    }
}
