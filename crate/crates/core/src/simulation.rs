//! Round-by-round harness for an optimizer plan against a learner.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, GameError, MixedStrategy, Role};
use crate::learners::{
    audit, Feedback, FeedbackMode, Learner, LearnerConfig, LearnerError, RegretAccumulator,
    RewardTrace, RoundContext,
};
use crate::optimizers::{History, OptimizerError, OptimizerPlan};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid match: {0}")]
    Config(String),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Rewards and utilities are expectations over both mixed strategies.
    #[default]
    Expected,
    /// Both players draw pure actions every round.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    /// Keep the learner trace and the per-round log.
    #[default]
    Full,
    /// Keep running totals only.
    Summary,
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub game: Game,
    pub plan: OptimizerPlan,
    pub learner: LearnerConfig,
    pub rounds: usize,
    /// Seeds the learner (overriding `learner.seed`) and, on a separate
    /// stream, the optimizer's action draws.
    pub seed: u64,
    pub sampling: SamplingMode,
    pub trace: TraceLevel,
}

impl MatchConfig {
    pub fn new(game: Game, plan: impl Into<OptimizerPlan>, learner: LearnerConfig, rounds: usize) -> Self {
        MatchConfig {
            game,
            plan: plan.into(),
            learner,
            rounds,
            seed: 0,
            sampling: SamplingMode::Expected,
            trace: TraceLevel::Full,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sampling(mut self, sampling: SamplingMode) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_trace(mut self, trace: TraceLevel) -> Self {
        self.trace = trace;
        self
    }

    fn validate(&self) -> Result<(), SimulationError> {
        if self.rounds == 0 {
            return Err(SimulationError::Config("need at least one round".into()));
        }
        let m = self.game.num_optimizer_actions();
        if self.plan.num_optimizer_actions() != m {
            return Err(SimulationError::Config(format!(
                "plan covers {} optimizer actions, game has {m}",
                self.plan.num_optimizer_actions()
            )));
        }
        if let OptimizerPlan::Schedule(s) = &self.plan {
            if s.horizon() != self.rounds {
                return Err(SimulationError::Config(format!(
                    "schedule covers {} rounds, match has {}",
                    s.horizon(),
                    self.rounds
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// 1-based.
    pub round: usize,
    /// Drawn optimizer action, sampled mode only.
    pub optimizer_action: Option<usize>,
    pub learner_action: usize,
    pub optimizer_utility: f64,
    pub learner_utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub rounds: usize,
    pub optimizer_total: f64,
    pub optimizer_average: f64,
    pub learner_total: f64,
    /// Expected regret in expected mode, realized regret in sampled mode.
    pub regret: f64,
    /// Same convention as `regret`.
    pub swap_regret: f64,
    /// Average learner play distribution over the match.
    pub learner_play_share: Vec<f64>,
    /// How often each arm was pulled.
    pub learner_action_counts: Vec<usize>,
    /// Present at [`TraceLevel::Full`].
    pub trace: Option<RewardTrace>,
    pub log: Vec<RoundLog>,
}

/// Plays the match. Deterministic given the config.
pub fn run(config: &MatchConfig) -> Result<MatchResult, SimulationError> {
    config.validate()?;
    let game = &config.game;
    let n = game.num_learner_actions();
    let rounds = config.rounds;
    let mut learner_config = config.learner.clone();
    learner_config.seed = config.seed;
    let mut learner: Box<dyn Learner> = learner_config.build(n, rounds, game.scale())?;
    let bandit = learner.feedback_mode() == FeedbackMode::Bandit;
    let mut optimizer_rng = ChaCha8Rng::seed_from_u64(config.seed);
    optimizer_rng.set_stream(1);

    let full = config.trace == TraceLevel::Full;
    let mut trace = full.then(|| RewardTrace::with_distributions(n));
    let mut acc = RegretAccumulator::new(n);
    let mut log = Vec::with_capacity(if full { rounds } else { 0 });
    let mut played: Vec<MixedStrategy> = Vec::new();
    let mut pulled: Vec<usize> = Vec::new();
    let adaptive = matches!(config.plan, OptimizerPlan::Adaptive { .. });

    let mut optimizer_total = 0.0;
    let mut learner_total = 0.0;
    let mut play_share = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let mut rewards = vec![0.0; n];
    let mut optimizer_cols = vec![0.0; n];

    let mut blocks = match &config.plan {
        OptimizerPlan::Schedule(s) => s.blocks(),
        OptimizerPlan::Adaptive { .. } => &[],
    }
    .iter();
    let mut current: Option<(&MixedStrategy, usize)> = None;

    for t in 0..rounds {
        let owned;
        let alpha: &MixedStrategy = match &config.plan {
            OptimizerPlan::Schedule(_) => {
                if current.is_none_or(|(_, left)| left == 0) {
                    let (a, len) = blocks.next().expect("schedule horizon checked");
                    current = Some((a, *len));
                }
                let (a, left) = current.as_mut().expect("block set");
                *left -= 1;
                a
            }
            OptimizerPlan::Adaptive { strategy, .. } => {
                owned = strategy(&History {
                    round: t,
                    optimizer_strategies: &played,
                    learner_actions: &pulled,
                });
                if owned.len() != game.num_optimizer_actions() {
                    return Err(SimulationError::Config(format!(
                        "adaptive strategy covers {} actions in round {}",
                        owned.len(),
                        t + 1
                    )));
                }
                &owned
            }
        };
        let ctx = RoundContext {
            round: t,
            optimizer_strategy: Some(alpha),
            game: Some(game),
        };
        let dist = learner.strategy(&ctx)?;
        let chosen = learner.choose(&dist);
        let p = dist.probs();

        let (optimizer_action, optimizer_utility, learner_utility) = match config.sampling {
            SamplingMode::Expected => {
                game.column_utilities_into(Role::Learner, alpha.probs(), &mut rewards);
                game.column_utilities_into(Role::Optimizer, alpha.probs(), &mut optimizer_cols);
                let uo: f64 = optimizer_cols.iter().zip(p).map(|(u, q)| u * q).sum();
                let ul: f64 = rewards.iter().zip(p).map(|(u, q)| u * q).sum();
                (None, uo, ul)
            }
            SamplingMode::Sampled => {
                let a = crate::learners::sample_index(&mut optimizer_rng, alpha);
                for (j, r) in rewards.iter_mut().enumerate() {
                    *r = game.payoff(Role::Learner, a, j);
                }
                (Some(a), game.payoff(Role::Optimizer, a, chosen), rewards[chosen])
            }
        };
        optimizer_total += optimizer_utility;
        learner_total += learner_utility;
        play_share.iter_mut().zip(p).for_each(|(s, q)| *s += q);
        counts[chosen] += 1;

        if bandit {
            learner.observe(Feedback::Bandit { arm: chosen, reward: rewards[chosen] })?;
        } else {
            learner.observe(Feedback::Experts(&rewards))?;
        }
        acc.push(&rewards, chosen, p);
        if let Some(trace) = trace.as_mut() {
            trace.push(rewards.clone(), chosen, Some(p))?;
            log.push(RoundLog {
                round: t + 1,
                optimizer_action,
                learner_action: chosen,
                optimizer_utility,
                learner_utility,
            });
        }
        if adaptive {
            played.push(alpha.clone());
            pulled.push(chosen);
        }
    }

    let (regret, swap_regret) = match config.sampling {
        SamplingMode::Expected => (acc.expected_regret(), acc.expected_swap_regret().0),
        SamplingMode::Sampled => (acc.regret(), acc.swap_regret().0),
    };
    play_share.iter_mut().for_each(|s| *s /= rounds as f64);
    Ok(MatchResult {
        rounds,
        optimizer_total,
        optimizer_average: optimizer_total / rounds as f64,
        learner_total,
        regret,
        swap_regret,
        learner_play_share: play_share,
        learner_action_counts: counts,
        trace,
        log,
    })
}

/// Runs every config, in parallel, keeping input order. A failing run does
/// not stop the others.
pub fn sweep(configs: &[MatchConfig]) -> Vec<Result<MatchResult, SimulationError>> {
    configs.par_iter().map(run).collect()
}

impl MatchResult {
    /// Recomputes regret and swap regret from the stored trace with the
    /// audit functions, using the same convention as the match.
    pub fn audit_regrets(&self, sampling: SamplingMode) -> Option<Result<(f64, f64), LearnerError>> {
        let trace = self.trace.as_ref()?;
        Some(match sampling {
            SamplingMode::Expected => audit::expected_regret(trace)
                .and_then(|r| Ok((r, audit::expected_swap_regret(trace)?.0))),
            SamplingMode::Sampled => Ok((audit::regret(trace), audit::swap_regret(trace).0)),
        })
    }
}

/// One line of a sweep summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_id: String,
    pub seed: u64,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub optimizer_avg: f64,
    pub regret: f64,
    pub swap_regret: f64,
}

impl ResultRow {
    pub fn new(config_id: impl Into<String>, seed: u64, result: &MatchResult) -> Self {
        ResultRow {
            config_id: config_id.into(),
            seed,
            rounds: result.rounds,
            optimizer_avg: result.optimizer_average,
            regret: result.regret,
            swap_regret: result.swap_regret,
        }
    }
}

/// Writes `config_id,seed,T,optimizer_avg,regret,swap_regret`.
pub fn write_results_csv<W: Write>(writer: W, rows: &[ResultRow]) -> Result<(), SimulationError> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(["config_id", "seed", "T", "optimizer_avg", "regret", "swap_regret"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
