//! Repeated bimatrix games between an optimizer and a no-regret learner.
//!
//! * [`game`]: games, mixed strategies, best responses, Stackelberg commitments.
//! * [`lp`]: the dense simplex solver behind every optimization in the crate.
//! * [`learners`]: mean-based and no-swap-regret learners plus regret audits.
//! * [`optimizers`]: commitment and scripted schedules for the optimizer.
//! * [`control`]: the continuous control problem describing optimal play
//!   against mean-based learners, with exact evaluation and a policy search.
//! * [`simulation`]: the round-by-round harness and CSV exports.

pub mod control;
pub mod game;
pub mod learners;
pub mod lp;
pub mod optimizers;
pub mod simulation;

pub use game::{Commitment, Game, GameError, MixedStrategy, Role, StackelbergSolution};
pub use learners::{Algorithm, FeedbackMode, Learner, LearnerConfig, RewardTrace};
pub use optimizers::{Policy, PolicyStep, RoundSchedule};
