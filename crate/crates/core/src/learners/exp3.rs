use rand_chacha::ChaCha8Rng;

use super::mw::exp_weights;
use super::{check_arms, sample_index, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::MixedStrategy;

/// EXP3 in loss form. Rewards in `[-scale, scale]` become losses
/// `scale - r` in `[0, 2 scale]`; the shift leaves regret unchanged.
/// The pulled arm's loss is importance-weighted by its play probability.
#[derive(Debug, Clone)]
pub struct Exp3 {
    eta: f64,
    scale: f64,
    loss_estimates: Vec<f64>,
    last_dist: Option<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl Exp3 {
    pub fn new(num_arms: usize, eta: f64, reward_scale: f64, rng: ChaCha8Rng) -> Self {
        Exp3 {
            eta,
            scale: reward_scale,
            loss_estimates: vec![0.0; num_arms],
            last_dist: None,
            rng,
        }
    }

    /// `sqrt(ln K / (T K))`.
    pub fn default_rate(num_arms: usize, horizon: usize) -> f64 {
        let k = num_arms.max(2) as f64;
        (k.ln() / (horizon as f64 * k)).sqrt()
    }

    pub fn distribution(&self) -> Vec<f64> {
        let neg: Vec<f64> = self.loss_estimates.iter().map(|l| -l).collect();
        exp_weights(&neg, self.eta)
    }
}

impl Learner for Exp3 {
    fn name(&self) -> &'static str {
        "EXP3"
    }

    fn num_arms(&self) -> usize {
        self.loss_estimates.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Bandit
    }

    fn strategy(&mut self, _ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        let p = self.distribution();
        let dist = MixedStrategy::from_weights(&p)?;
        self.last_dist = Some(p);
        Ok(dist)
    }

    fn choose(&mut self, dist: &MixedStrategy) -> usize {
        sample_index(&mut self.rng, dist)
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Bandit { arm, reward } = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "EXP3",
                expected: FeedbackMode::Bandit,
            });
        };
        if arm >= self.loss_estimates.len() {
            check_arms(self.loss_estimates.len(), arm + 1)?;
        }
        let p = self.last_dist.take().ok_or(LearnerError::NoPendingRound)?;
        let loss = (self.scale - reward).max(0.0);
        self.loss_estimates[arm] += loss / p[arm];
        Ok(())
    }
}
