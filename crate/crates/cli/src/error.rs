use std::path::PathBuf;

use strategize_core::control::ControlError;
use strategize_core::learners::LearnerError;
use strategize_core::optimizers::OptimizerError;
use strategize_core::simulation::SimulationError;
use strategize_core::GameError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    LoadGame { path: PathBuf, source: GameError },
    #[error("{path}: {source}")]
    LoadPolicy { path: PathBuf, source: OptimizerError },
    #[error("{path}: {source}")]
    LoadTrace { path: PathBuf, source: LearnerError },
    #[error("{path}: failed to parse experiment config: {source}")]
    LoadConfig { path: PathBuf, source: serde_json::Error },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
