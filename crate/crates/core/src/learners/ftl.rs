use rand_chacha::ChaCha8Rng;

use super::{check_arms, sample_index, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::MixedStrategy;

/// Deterministic gamma-mean-based reference learner: uniform over every arm
/// whose cumulative reward is within `gamma * T` of the leader's.
#[derive(Debug, Clone)]
pub struct FollowTheLeader {
    gamma: f64,
    slack: f64,
    sigma: Vec<f64>,
    rng: ChaCha8Rng,
}

impl FollowTheLeader {
    pub fn new(num_arms: usize, gamma: f64, horizon: usize, rng: ChaCha8Rng) -> Self {
        FollowTheLeader {
            gamma,
            slack: gamma * horizon as f64,
            sigma: vec![0.0; num_arms],
            rng,
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

    /// Arms within the slack of the leader.
    pub fn leader_set(&self) -> Vec<usize> {
        let top = self.sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..self.sigma.len())
            .filter(|&i| self.sigma[i] >= top - self.slack)
            .collect()
    }
}

impl Learner for FollowTheLeader {
    fn name(&self) -> &'static str {
        "FTL"
    }

    fn num_arms(&self) -> usize {
        self.sigma.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Experts
    }

    fn strategy(&mut self, _ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        let set = self.leader_set();
        let mut w = vec![0.0; self.sigma.len()];
        for i in &set {
            w[*i] = 1.0;
        }
        Ok(MixedStrategy::from_weights(&w)?)
    }

    fn choose(&mut self, dist: &MixedStrategy) -> usize {
        sample_index(&mut self.rng, dist)
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Experts(rewards) = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "FTL",
                expected: FeedbackMode::Experts,
            });
        };
        check_arms(self.sigma.len(), rewards.len())?;
        self.sigma.iter_mut().zip(rewards).for_each(|(s, r)| *s += r);
        Ok(())
    }
}
