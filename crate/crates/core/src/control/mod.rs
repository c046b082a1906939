//! The continuous control problem describing optimal non-adaptive play
//! against a mean-based learner.
//!
//! The learner's state is its vector of cumulative utilities, reduced to
//! `x_i = u_i - u_N` for `i < N`. Playing `alpha` for duration `t` moves the
//! state by `t` times the reduced learner utilities of `alpha`, and while the
//! state sits in the region where `b_j` leads, the optimizer earns
//! `u_O(alpha, b_j)` per unit time.

mod geometry;
mod path;
mod search;

use thiserror::Error;

use crate::game::GameError;
use crate::lp::LpError;
use crate::optimizers::OptimizerError;

pub use geometry::{displacement, in_region, regions_of, ControlState, REGION_TOL};
pub use path::{
    certify_cycle, cycle_value, evaluate, merge, subdivide, subdivide_from, AnnotatedPolicy,
    AnnotatedStep, CycleCertificate, CYCLE_TOL,
};
pub use search::{search, search_with, CertificateKind, SearchOptions, SearchResult};

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("state has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("not a cycle: {0}")]
    InvalidCycle(String),
    #[error("invalid search options: {0}")]
    Options(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Policy(#[from] OptimizerError),
    #[error(transparent)]
    Lp(#[from] LpError),
}
