use rand_chacha::ChaCha8Rng;

use super::{check_arms, sample_index, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::MixedStrategy;

/// Hedge over cumulative rewards: `p_i ∝ exp(eta * sigma_i)`.
#[derive(Debug, Clone)]
pub struct MultiplicativeWeights {
    eta: f64,
    sigma: Vec<f64>,
    rng: ChaCha8Rng,
}

impl MultiplicativeWeights {
    pub fn new(num_arms: usize, eta: f64, rng: ChaCha8Rng) -> Self {
        MultiplicativeWeights {
            eta,
            sigma: vec![0.0; num_arms],
            rng,
        }
    }

    /// `sqrt(ln K / T)`.
    pub fn default_rate(num_arms: usize, horizon: usize) -> f64 {
        ((num_arms.max(2) as f64).ln() / horizon as f64).sqrt()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.sigma
    }

    /// Overwrites the cumulative rewards, e.g. to evaluate a given state.
    pub fn set_cumulative(&mut self, sigma: &[f64]) {
        self.sigma.copy_from_slice(sigma);
    }

    pub fn distribution(&self) -> Vec<f64> {
        exp_weights(&self.sigma, self.eta)
    }
}

/// Normalized `exp(eta * s_i)`, shifted by the maximum for stability.
pub(crate) fn exp_weights(scores: &[f64], eta: f64) -> Vec<f64> {
    let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = scores.iter().map(|s| (eta * (s - top)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

impl Learner for MultiplicativeWeights {
    fn name(&self) -> &'static str {
        "MW"
    }

    fn num_arms(&self) -> usize {
        self.sigma.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Experts
    }

    fn strategy(&mut self, _ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        Ok(MixedStrategy::from_weights(&self.distribution())?)
    }

    fn choose(&mut self, dist: &MixedStrategy) -> usize {
        sample_index(&mut self.rng, dist)
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Experts(rewards) = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "MW",
                expected: FeedbackMode::Experts,
            });
        };
        check_arms(self.sigma.len(), rewards.len())?;
        self.sigma.iter_mut().zip(rewards).for_each(|(s, r)| *s += r);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn mw(k: usize, eta: f64) -> MultiplicativeWeights {
        MultiplicativeWeights::new(k, eta, ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn symmetric_state_is_uniform() {
        let mut l = mw(2, 0.3);
        let p = l.strategy(&RoundContext::default()).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn exponential_weights_value() {
        let mut l = mw(2, 1.0);
        l.observe(Feedback::Experts(&[1.0, 0.0])).unwrap();
        let p = l.strategy(&RoundContext::default()).unwrap();
        let e = std::f64::consts::E;
        assert!((p.probs()[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((p.probs()[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bandit_feedback_and_wrong_width() {
        let mut l = mw(2, 1.0);
        assert!(l.observe(Feedback::Bandit { arm: 0, reward: 1.0 }).is_err());
        assert!(l.observe(Feedback::Experts(&[1.0])).is_err());
    }

    #[test]
    fn huge_scores_stay_finite() {
        let w = exp_weights(&[1e6, 0.0, -1e6], 1.0);
        assert_eq!(w, vec![1.0, 0.0, 0.0]);
    }
}
