//! Learner-side algorithms and the regret audits run over their traces.
//!
//! Every learner treats the learner's actions as arms of an online learning
//! problem whose round-`t` reward for arm `j` is the learner's utility for
//! `b_j`. Learners are driven in two calls per round: [`Learner::strategy`]
//! returns the play distribution, [`Learner::observe`] feeds the rewards.

mod adversarial;
pub mod audit;
mod exp3;
mod ftl;
mod ftpl;
mod mw;
pub mod swap;
pub mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, GameError, MixedStrategy};

pub use adversarial::AdversarialMeanBased;
pub use audit::{
    expected_regret, expected_swap_regret, mean_based_audit, regret, regret_under, swap_regret,
    MeanBasedReport, RegretAccumulator, SwapFunction, Violation,
};
pub use exp3::Exp3;
pub use ftl::FollowTheLeader;
pub use ftpl::FollowPerturbedLeader;
pub use mw::MultiplicativeWeights;
pub use swap::{stationary_distribution, BlumMansour};
pub use trace::RewardTrace;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("{algorithm} expects {expected:?} feedback")]
    FeedbackMismatch {
        algorithm: &'static str,
        expected: FeedbackMode,
    },
    #[error("feedback covers {got} arms, learner has {expected}")]
    ArmCount { expected: usize, got: usize },
    #[error("invalid learner configuration: {0}")]
    Config(String),
    #[error("stationary distribution solve failed: residual {residual:.3e} on {arms} arms")]
    Stationary { residual: f64, arms: usize },
    #[error("{0} needs the optimizer's round strategy and the game")]
    MissingContext(&'static str),
    #[error("bandit feedback arrived before any strategy was played")]
    NoPendingRound,
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    /// Full reward vector every round.
    Experts,
    /// Only the pulled arm's reward.
    Bandit,
}

/// What the learner sees at the end of a round.
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    Experts(&'a [f64]),
    Bandit { arm: usize, reward: f64 },
}

/// Side information available when a learner picks its round distribution.
/// Only the white-box adversarial learner reads it.
#[derive(Debug, Clone, Copy, Default)]
pub struct RoundContext<'a> {
    pub round: usize,
    pub optimizer_strategy: Option<&'a MixedStrategy>,
    pub game: Option<&'a Game>,
}

pub trait Learner: Send {
    fn name(&self) -> &'static str;
    fn num_arms(&self) -> usize;
    fn feedback_mode(&self) -> FeedbackMode;
    /// Play distribution for the current round.
    fn strategy(&mut self, ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError>;
    /// Draws the pulled arm for a distribution returned by `strategy`.
    fn choose(&mut self, dist: &MixedStrategy) -> usize;
    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// Multiplicative weights (Hedge) on cumulative rewards.
    Mw,
    /// Follow the perturbed leader with uniform perturbations.
    Ftpl,
    /// Uniform play over every arm within `gamma * T` of the leader.
    Ftl,
    /// Importance-weighted exponential weights for bandit feedback.
    Exp3,
    /// Swap-regret reduction over one inner learner per arm.
    BlumMansour { inner: Box<Algorithm> },
    /// White-box mean-based learner that picks the optimizer's worst
    /// near-leading action.
    AdversarialMeanBased,
}

impl Algorithm {
    pub fn label(&self) -> String {
        match self {
            Algorithm::Mw => "MW".into(),
            Algorithm::Ftpl => "FTPL".into(),
            Algorithm::Ftl => "FTL".into(),
            Algorithm::Exp3 => "EXP3".into(),
            Algorithm::BlumMansour { inner } => format!("BlumMansour({})", inner.label()),
            Algorithm::AdversarialMeanBased => "AdversarialMeanBased".into(),
        }
    }

    pub fn required_feedback(&self) -> FeedbackMode {
        match self {
            Algorithm::Exp3 => FeedbackMode::Bandit,
            _ => FeedbackMode::Experts,
        }
    }
}

/// Parameters for constructing a learner. Unset rates fall back to the
/// horizon-tuned defaults documented on each algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Learning rate (MW, EXP3) or perturbation width (FTPL).
    #[serde(default)]
    pub rate: Option<f64>,
    /// Mean-based slack (FTL, AdversarialMeanBased).
    #[serde(default)]
    pub gamma: Option<f64>,
    pub feedback: FeedbackMode,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let feedback = algorithm.required_feedback();
        LearnerConfig {
            algorithm,
            rate: None,
            gamma: None,
            feedback,
            seed: 0,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        if let Some(rate) = self.rate {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(LearnerError::Config(format!("rate must be positive, got {rate}")));
            }
        }
        if let Some(gamma) = self.gamma {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(LearnerError::Config(format!("gamma must lie in (0, 1), got {gamma}")));
            }
        }
        let needed = self.algorithm.required_feedback();
        if self.feedback != needed {
            return Err(LearnerError::Config(format!(
                "{} requires {needed:?} feedback, configured {:?}",
                self.algorithm.label(),
                self.feedback
            )));
        }
        if let Algorithm::BlumMansour { inner } = &self.algorithm {
            if !matches!(**inner, Algorithm::Mw | Algorithm::Ftpl | Algorithm::Ftl) {
                return Err(LearnerError::Config(format!(
                    "BlumMansour needs an experts-mode inner learner, got {}",
                    inner.label()
                )));
            }
        }
        Ok(())
    }

    /// Instantiates the learner for `num_arms` arms over `horizon` rounds with
    /// rewards bounded by `reward_scale` in absolute value.
    pub fn build(
        &self,
        num_arms: usize,
        horizon: usize,
        reward_scale: f64,
    ) -> Result<Box<dyn Learner>, LearnerError> {
        self.validate()?;
        if num_arms == 0 || horizon == 0 {
            return Err(LearnerError::Config("need at least one arm and one round".into()));
        }
        build_algorithm(
            &self.algorithm,
            self.rate,
            self.gamma,
            self.seed,
            num_arms,
            horizon,
            reward_scale,
        )
    }
}

fn build_algorithm(
    algorithm: &Algorithm,
    rate: Option<f64>,
    gamma: Option<f64>,
    seed: u64,
    k: usize,
    horizon: usize,
    scale: f64,
) -> Result<Box<dyn Learner>, LearnerError> {
    let t = horizon as f64;
    let rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match algorithm {
        Algorithm::Mw => Box::new(MultiplicativeWeights::new(
            k,
            rate.unwrap_or_else(|| MultiplicativeWeights::default_rate(k, horizon)),
            rng,
        )),
        Algorithm::Ftpl => Box::new(FollowPerturbedLeader::new(
            k,
            rate.unwrap_or_else(|| t.sqrt()),
            rng,
        )),
        Algorithm::Ftl => Box::new(FollowTheLeader::new(
            k,
            gamma.unwrap_or_else(|| t.powf(-0.25)),
            horizon,
            rng,
        )),
        Algorithm::Exp3 => Box::new(Exp3::new(
            k,
            rate.unwrap_or_else(|| Exp3::default_rate(k, horizon)),
            scale,
            rng,
        )),
        Algorithm::AdversarialMeanBased => Box::new(AdversarialMeanBased::new(
            k,
            gamma.unwrap_or_else(|| t.powf(-0.5)),
            horizon,
        )),
        Algorithm::BlumMansour { inner } => {
            let mut instances = Vec::with_capacity(k);
            for i in 0..k {
                let inner_seed = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(i as u64 + 1);
                instances.push(build_algorithm(inner, rate, gamma, inner_seed, k, horizon, scale)?);
            }
            Box::new(BlumMansour::new(instances, rng))
        }
    })
}

pub(crate) fn check_arms(expected: usize, got: usize) -> Result<(), LearnerError> {
    if expected != got {
        return Err(LearnerError::ArmCount { expected, got });
    }
    Ok(())
}

/// Samples an index from `dist` with a single uniform draw.
pub(crate) fn sample_index<R: rand::Rng>(rng: &mut R, dist: &MixedStrategy) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let probs = dist.probs();
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Round-off left `acc` just below one: fall back to the last supported arm.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}
