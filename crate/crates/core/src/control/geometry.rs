use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::game::{Game, MixedStrategy, Role};

/// Tolerance for region membership.
pub const REGION_TOL: f64 = 1e-9;

/// Reduced learner state `x_i = u_i - u_N`, `N - 1` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlState(pub Vec<f64>);

impl ControlState {
    pub fn origin(num_learner_actions: usize) -> Self {
        ControlState(vec![0.0; num_learner_actions.saturating_sub(1)])
    }

    /// Full utility vector `(x_1, ..., x_{N-1}, 0)`.
    pub fn lifted(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.push(0.0);
        v
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ControlState(self.0.iter().map(|x| x * factor).collect())
    }
}

impl Deref for ControlState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ControlState {
    fn from(v: Vec<f64>) -> Self {
        ControlState(v)
    }
}

/// Per-unit-time state change under `alpha`: learner utilities of the first
/// `N - 1` actions minus that of the last.
pub fn displacement(game: &Game, alpha: &MixedStrategy) -> ControlState {
    let mut u = vec![0.0; game.num_learner_actions()];
    game.column_utilities_into(Role::Learner, alpha.probs(), &mut u);
    ControlState(reduce(&u))
}

pub(crate) fn reduce(full: &[f64]) -> Vec<f64> {
    let last = full[full.len() - 1];
    full[..full.len() - 1].iter().map(|u| u - last).collect()
}

/// Regions (learner action indices) whose defining maximum is attained at
/// `x`, i.e. the actions with maximal cumulative utility.
pub fn regions_of(x: &[f64]) -> Vec<usize> {
    let top = x.iter().cloned().fold(0.0, f64::max);
    let mut out: Vec<usize> = (0..x.len()).filter(|&j| x[j] >= top - REGION_TOL).collect();
    if top <= REGION_TOL {
        out.push(x.len());
    }
    out
}

/// Whether `x` lies in the closed region of action `j`, up to `tol`.
pub fn in_region(x: &[f64], j: usize, tol: f64) -> bool {
    let top = x.iter().cloned().fold(0.0, f64::max);
    let value = if j == x.len() { 0.0 } else { x[j] };
    value >= top - tol
}
