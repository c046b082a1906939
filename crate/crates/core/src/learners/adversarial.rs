use super::{check_arms, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::{Game, MixedStrategy, Role};

/// A mean-based learner built to hurt a known optimizer schedule: among the
/// actions whose cumulative reward is within `gamma * T` of the leader, it
/// plays the one minimizing the optimizer's utility this round.
#[derive(Debug, Clone)]
pub struct AdversarialMeanBased {
    gamma: f64,
    slack: f64,
    sigma: Vec<f64>,
}

impl AdversarialMeanBased {
    pub fn new(num_arms: usize, gamma: f64, horizon: usize) -> Self {
        AdversarialMeanBased {
            gamma,
            slack: gamma * horizon as f64,
            sigma: vec![0.0; num_arms],
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.sigma
    }

    pub fn set_cumulative(&mut self, sigma: &[f64]) {
        self.sigma.copy_from_slice(sigma);
    }

    /// `{ j : max_i sigma_i - sigma_j < gamma T }`; always holds the leader.
    pub fn candidate_set(&self) -> Vec<usize> {
        let top = self.sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.sigma.len())
            .filter(|&j| top - self.sigma[j] < self.slack || self.sigma[j] == top)
            .collect()
    }

    /// The candidate minimizing `u_O(alpha, b_j)`, lowest index on ties.
    pub fn select(&self, alpha: &MixedStrategy, game: &Game) -> Result<usize, LearnerError> {
        let u = game.column_utilities(Role::Optimizer, alpha.probs())?;
        check_arms(self.sigma.len(), u.len())?;
        let mut best: Option<usize> = None;
        for j in self.candidate_set() {
            if best.is_none_or(|b| u[j] < u[b]) {
                best = Some(j);
            }
        }
        Ok(best.expect("candidate set contains the leader"))
    }
}

impl Learner for AdversarialMeanBased {
    fn name(&self) -> &'static str {
        "AdversarialMeanBased"
    }

    fn num_arms(&self) -> usize {
        self.sigma.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Experts
    }

    fn strategy(&mut self, ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        let (Some(alpha), Some(game)) = (ctx.optimizer_strategy, ctx.game) else {
            return Err(LearnerError::MissingContext("AdversarialMeanBased"));
        };
        let j = self.select(alpha, game)?;
        Ok(MixedStrategy::pure(self.sigma.len(), j))
    }

    fn choose(&mut self, dist: &MixedStrategy) -> usize {
        dist.mode()
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Experts(rewards) = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "AdversarialMeanBased",
                expected: FeedbackMode::Experts,
            });
        };
        check_arms(self.sigma.len(), rewards.len())?;
        self.sigma.iter_mut().zip(rewards).for_each(|(s, r)| *s += r);
        Ok(())
    }
}
