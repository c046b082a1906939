//! Experiment configs for `simulate`: a JSON file naming the game, the
//! optimizer, the learner and the seeds. Relative paths inside a config file
//! resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use strategize_core::optimizers::{
    commitment_schedule, exploit_policy_table1, policy_to_schedule, RoundSchedule,
};
use strategize_core::simulation::{MatchConfig, SamplingMode, TraceLevel};
use strategize_core::{Algorithm, Game, LearnerConfig, Policy};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandTag {
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerSpec {
    /// Piecewise-constant policy file, stretched over the horizon.
    Policy { path: PathBuf },
    /// Top for the first half, Bottom for the second.
    Exploit { epsilon: f64 },
    /// Stackelberg commitment with `delta` of the max-margin strategy mixed
    /// in. `delta = 0` plays the exact commitment.
    Commitment { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSettings {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl LearnerSettings {
    pub fn to_config(&self) -> LearnerConfig {
        let mut config = LearnerConfig::new(self.algorithm.clone());
        config.rate = self.rate;
        config.gamma = self.gamma;
        config
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandTag,
    #[serde(default)]
    pub id: Option<String>,
    pub game: PathBuf,
    /// Shorthand for `optimizer: {"kind": "policy", "path": ...}`.
    #[serde(default)]
    pub policy: Option<PathBuf>,
    #[serde(default)]
    pub optimizer: Option<OptimizerSpec>,
    pub learner: LearnerSettings,
    #[serde(alias = "T")]
    pub rounds: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub sampling: SamplingMode,
    /// Write one trace CSV per seed.
    #[serde(default)]
    pub traces: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// A config with its files loaded and checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub game_path: PathBuf,
    pub game: Game,
    pub optimizer: Optimizer,
    pub learner: LearnerConfig,
    pub rounds: usize,
    pub seeds: Vec<u64>,
    pub sampling: SamplingMode,
    pub traces: bool,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum Optimizer {
    Policy(Policy),
    Exploit(f64),
    Commitment(f64),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|source| CliError::LoadConfig { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.game);
        if let Some(p) = self.policy.as_mut() {
            join(p);
        }
        if let Some(OptimizerSpec::Policy { path }) = self.optimizer.as_mut() {
            join(path);
        }
        if let Some(p) = self.out_dir.as_mut() {
            join(p);
        }
    }

    /// Loads the referenced files and checks the invariants.
    pub fn resolve(&self) -> Result<Experiment, CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.rounds == 0 {
            return Err(CliError::Config("T must be at least 1".into()));
        }
        let game = Game::load(&self.game)
            .map_err(|source| CliError::LoadGame { path: self.game.clone(), source })?;
        let spec = match (&self.policy, &self.optimizer) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either policy or optimizer, not both".into()))
            }
            (Some(path), None) => OptimizerSpec::Policy { path: path.clone() },
            (None, Some(spec)) => spec.clone(),
            (None, None) => OptimizerSpec::Commitment { delta: 0.0 },
        };
        let optimizer = match spec {
            OptimizerSpec::Policy { path } => {
                let policy = Policy::load(&path)
                    .map_err(|source| CliError::LoadPolicy { path: path.clone(), source })?;
                policy
                    .check_game(&game)
                    .map_err(|source| CliError::LoadPolicy { path, source })?;
                Optimizer::Policy(policy)
            }
            OptimizerSpec::Exploit { epsilon } => {
                if game.num_optimizer_actions() != 2 {
                    return Err(CliError::Config(format!(
                        "the exploit policy needs 2 optimizer actions, game has {}",
                        game.num_optimizer_actions()
                    )));
                }
                exploit_policy_table1(epsilon)?;
                Optimizer::Exploit(epsilon)
            }
            OptimizerSpec::Commitment { delta } => {
                if !(0.0..1.0).contains(&delta) {
                    return Err(CliError::Config(format!("delta must lie in [0, 1), got {delta}")));
                }
                Optimizer::Commitment(delta)
            }
        };
        let learner = self.learner.to_config();
        learner.validate()?;
        let id = self.id.clone().unwrap_or_else(|| {
            let stem = self.game.file_stem().and_then(|s| s.to_str()).unwrap_or("game");
            format!("{stem}-{}", learner.algorithm.label().to_lowercase())
        });
        Ok(Experiment {
            id,
            game_path: self.game.clone(),
            game,
            optimizer,
            learner,
            rounds: self.rounds,
            seeds: self.seeds.clone(),
            sampling: self.sampling,
            traces: self.traces,
            out_dir: self.out_dir.clone(),
        })
    }
}

impl Experiment {
    pub fn schedule(&self) -> Result<RoundSchedule, CliError> {
        let t = self.rounds;
        Ok(match &self.optimizer {
            Optimizer::Policy(policy) => policy_to_schedule(policy, t)?,
            Optimizer::Exploit(epsilon) => policy_to_schedule(&exploit_policy_table1(*epsilon)?, t)?,
            Optimizer::Commitment(delta) if *delta == 0.0 => {
                RoundSchedule::constant(self.game.stackelberg()?.commitment, t)?
            }
            Optimizer::Commitment(delta) => commitment_schedule(&self.game, *delta, t)?,
        })
    }

    /// One match per seed.
    pub fn matches(&self) -> Result<Vec<MatchConfig>, CliError> {
        let schedule = self.schedule()?;
        let trace = if self.traces { TraceLevel::Full } else { TraceLevel::Summary };
        Ok(self
            .seeds
            .iter()
            .map(|&seed| {
                MatchConfig::new(self.game.clone(), schedule.clone(), self.learner.clone(), self.rounds)
                    .with_seed(seed)
                    .with_sampling(self.sampling)
                    .with_trace(trace)
            })
            .collect())
    }
}
