//! Bimatrix games, mixed strategies and the one-shot solution concepts the
//! repeated-game results are measured against.
//!
//! The optimizer is the row player (actions `a_1..a_M`), the learner the
//! column player (actions `b_1..b_N`). Stackelberg commitments are computed
//! with one linear program per learner action.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{Bounds, LinearProgram, LpError, Sense};

/// Two learner actions whose utilities differ by less than this are tied.
pub const TIE_TOL: f64 = 1e-9;

/// Allowed deviation of a probability vector's sum from one.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("learner action {action} is weakly dominated (best commitment margin {margin:.3e} <= 0)")]
    DominatedStrategy { action: String, margin: f64 },
    #[error("no learner action admits a Stackelberg commitment: {0}")]
    NoStackelberg(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("failed to parse game JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Probability vector over one player's actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(GameError::InvalidStrategy(format!(
                "entries must be finite and nonnegative: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(GameError::InvalidStrategy(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(MixedStrategy(probs))
    }

    /// Normalizes nonnegative weights; entries in `(-1e-9, 0)` are treated as round-off.
    pub fn from_weights(weights: &[f64]) -> Result<Self, GameError> {
        if weights.iter().any(|w| !w.is_finite() || *w < -1e-9) {
            return Err(GameError::InvalidStrategy(format!(
                "weights must be finite and nonnegative: {weights:?}"
            )));
        }
        let clean: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let total: f64 = clean.iter().sum();
        if total <= 0.0 {
            return Err(GameError::InvalidStrategy("weights sum to zero".into()));
        }
        Ok(MixedStrategy(clean.into_iter().map(|w| w / total).collect()))
    }

    pub fn pure(len: usize, index: usize) -> Self {
        assert!(index < len, "pure strategy index {index} out of range {len}");
        let mut p = vec![0.0; len];
        p[index] = 1.0;
        MixedStrategy(p)
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0);
        MixedStrategy(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &MixedStrategy, weight: f64) -> Result<Self, GameError> {
        if self.len() != other.len() {
            return Err(GameError::Dimension {
                expected: self.len(),
                got: other.len(),
            });
        }
        let w: Vec<f64> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (1.0 - weight) * a + weight * b)
            .collect();
        MixedStrategy::from_weights(&w)
    }

    /// Index of the largest entry (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = GameError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        MixedStrategy::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(m: MixedStrategy) -> Self {
        m.0
    }
}

impl fmt::Display for MixedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:.6}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Optimizer,
    Learner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GameFile {
    optimizer_actions: Vec<String>,
    learner_actions: Vec<String>,
    optimizer_payoffs: Vec<Vec<f64>>,
    learner_payoffs: Vec<Vec<f64>>,
    scale: f64,
}

/// A two-player bimatrix game. Row `i` is optimizer action `i`, column `j`
/// learner action `j`; every entry is bounded in absolute value by `scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameFile", into = "GameFile")]
pub struct Game {
    optimizer_actions: Vec<String>,
    learner_actions: Vec<String>,
    optimizer_payoffs: Vec<Vec<f64>>,
    learner_payoffs: Vec<Vec<f64>>,
    scale: f64,
}

impl TryFrom<GameFile> for Game {
    type Error = GameError;
    fn try_from(g: GameFile) -> Result<Self, GameError> {
        Game::new(
            g.optimizer_actions,
            g.learner_actions,
            g.optimizer_payoffs,
            g.learner_payoffs,
            g.scale,
        )
    }
}

impl From<Game> for GameFile {
    fn from(g: Game) -> Self {
        GameFile {
            optimizer_actions: g.optimizer_actions,
            learner_actions: g.learner_actions,
            optimizer_payoffs: g.optimizer_payoffs,
            learner_payoffs: g.learner_payoffs,
            scale: g.scale,
        }
    }
}

/// Optimizer commitment paired with the learner best response it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergSolution {
    pub commitment: MixedStrategy,
    pub response: usize,
    pub value: f64,
}

/// A commitment perturbed so that the target response is the unique best
/// response, with every other learner action losing at least `margin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commitment {
    pub strategy: MixedStrategy,
    pub target_response: usize,
    pub margin: f64,
    pub delta: f64,
    /// The max-margin strategy mixed into the Stackelberg commitment.
    pub perturbation: MixedStrategy,
}

impl Game {
    pub fn new(
        optimizer_actions: Vec<String>,
        learner_actions: Vec<String>,
        optimizer_payoffs: Vec<Vec<f64>>,
        learner_payoffs: Vec<Vec<f64>>,
        scale: f64,
    ) -> Result<Self, GameError> {
        let m = optimizer_actions.len();
        let n = learner_actions.len();
        if m == 0 || n == 0 {
            return Err(GameError::Invalid("both players need at least one action".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GameError::Invalid(format!("scale must be positive, got {scale}")));
        }
        for (who, names) in [("optimizer", &optimizer_actions), ("learner", &learner_actions)] {
            for (i, a) in names.iter().enumerate() {
                if names[..i].contains(a) {
                    return Err(GameError::Invalid(format!("duplicate {who} action name {a:?}")));
                }
            }
        }
        for (who, mat) in [("optimizer", &optimizer_payoffs), ("learner", &learner_payoffs)] {
            if mat.len() != m {
                return Err(GameError::Invalid(format!(
                    "{who} payoffs have {} rows, expected {m}",
                    mat.len()
                )));
            }
            for (i, row) in mat.iter().enumerate() {
                if row.len() != n {
                    return Err(GameError::Invalid(format!(
                        "{who} payoff row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                for (j, v) in row.iter().enumerate() {
                    if !v.is_finite() || v.abs() > scale {
                        return Err(GameError::Invalid(format!(
                            "{who} payoff ({i},{j}) = {v} exceeds scale {scale}"
                        )));
                    }
                }
            }
        }
        Ok(Game {
            optimizer_actions,
            learner_actions,
            optimizer_payoffs,
            learner_payoffs,
            scale,
        })
    }

    /// The exploitable game: learner actions Left/Mid/Right, optimizer
    /// actions Top/Bottom. `epsilon` is the learner's payoff for (Top, Left).
    pub fn table1(epsilon: f64) -> Result<Self, GameError> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(GameError::Invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
        }
        Game::new(
            names(&["Top", "Bottom"]),
            names(&["Left", "Mid", "Right"]),
            vec![vec![0.0, -2.0, -2.0], vec![0.0, -2.0, 2.0]],
            vec![vec![epsilon, -1.0, 0.0], vec![-1.0, 1.0, 0.0]],
            2.0,
        )
    }

    pub fn matching_pennies() -> Self {
        Game::new(
            names(&["Heads", "Tails"]),
            names(&["Heads", "Tails"]),
            vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
            1.0,
        )
        .expect("matching pennies is well formed")
    }

    /// 2x2 game where committing to a mixture beats every Nash equilibrium:
    /// Stackelberg value 2.5 at (1/2, 1/2) against Right.
    pub fn commitment_2x2() -> Self {
        Game::new(
            names(&["Up", "Down"]),
            names(&["Left", "Right"]),
            vec![vec![1.0, 3.0], vec![0.0, 2.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            3.0,
        )
        .expect("commitment game is well formed")
    }

    /// Integer payoffs drawn uniformly from `[-max_abs, max_abs]`.
    pub fn random_integer<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        max_abs: i32,
        rng: &mut R,
    ) -> Result<Self, GameError> {
        if max_abs < 1 {
            return Err(GameError::Invalid("max_abs must be at least 1".into()));
        }
        let mut draw = || -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-max_abs..=max_abs) as f64).collect())
                .collect()
        };
        let u_o = draw();
        let u_l = draw();
        Game::new(
            (1..=rows).map(|i| format!("a{i}")).collect(),
            (1..=cols).map(|j| format!("b{j}")).collect(),
            u_o,
            u_l,
            max_abs as f64,
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self, GameError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)?;
        Game::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("games always serialize")
    }

    pub fn num_optimizer_actions(&self) -> usize {
        self.optimizer_actions.len()
    }

    pub fn num_learner_actions(&self) -> usize {
        self.learner_actions.len()
    }

    pub fn optimizer_actions(&self) -> &[String] {
        &self.optimizer_actions
    }

    pub fn learner_actions(&self) -> &[String] {
        &self.learner_actions
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn payoffs(&self, role: Role) -> &[Vec<f64>] {
        match role {
            Role::Optimizer => &self.optimizer_payoffs,
            Role::Learner => &self.learner_payoffs,
        }
    }

    pub fn payoff(&self, role: Role, row: usize, col: usize) -> f64 {
        self.payoffs(role)[row][col]
    }

    pub fn optimizer_action_index(&self, name: &str) -> Option<usize> {
        self.optimizer_actions.iter().position(|a| a == name)
    }

    pub fn learner_action_index(&self, name: &str) -> Option<usize> {
        self.learner_actions.iter().position(|a| a == name)
    }

    /// Both payoff matrices multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, GameError> {
        let mul = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect()
        };
        Game::new(
            self.optimizer_actions.clone(),
            self.learner_actions.clone(),
            mul(&self.optimizer_payoffs),
            mul(&self.learner_payoffs),
            self.scale * factor.abs(),
        )
    }

    /// `Some(c)` when `u_O + u_L == c` on every cell.
    pub fn constant_sum(&self) -> Option<f64> {
        let c = self.optimizer_payoffs[0][0] + self.learner_payoffs[0][0];
        let all = self
            .optimizer_payoffs
            .iter()
            .flatten()
            .zip(self.learner_payoffs.iter().flatten())
            .all(|(o, l)| (o + l - c).abs() <= 1e-12);
        all.then_some(c)
    }

    fn check_optimizer_len(&self, len: usize) -> Result<(), GameError> {
        if len != self.num_optimizer_actions() {
            return Err(GameError::Dimension {
                expected: self.num_optimizer_actions(),
                got: len,
            });
        }
        Ok(())
    }

    /// `u(alpha, b_j)` for every learner action `j`.
    pub fn column_utilities(&self, role: Role, alpha: &[f64]) -> Result<Vec<f64>, GameError> {
        self.check_optimizer_len(alpha.len())?;
        let mut out = vec![0.0; self.num_learner_actions()];
        self.column_utilities_into(role, alpha, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`Game::column_utilities`] for hot loops.
    pub fn column_utilities_into(&self, role: Role, alpha: &[f64], out: &mut [f64]) {
        debug_assert_eq!(alpha.len(), self.num_optimizer_actions());
        debug_assert_eq!(out.len(), self.num_learner_actions());
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, row) in alpha.iter().zip(self.payoffs(role)) {
            if *a == 0.0 {
                continue;
            }
            for (o, u) in out.iter_mut().zip(row) {
                *o += a * u;
            }
        }
    }

    /// The bilinear form `sum_i sum_j alpha_i beta_j u(a_i, b_j)`.
    pub fn utility(
        &self,
        alpha: &MixedStrategy,
        beta: &MixedStrategy,
        role: Role,
    ) -> Result<f64, GameError> {
        if beta.len() != self.num_learner_actions() {
            return Err(GameError::Dimension {
                expected: self.num_learner_actions(),
                got: beta.len(),
            });
        }
        let cols = self.column_utilities(role, alpha.probs())?;
        Ok(cols.iter().zip(beta.probs()).map(|(u, b)| u * b).sum())
    }

    /// Utility against a pure learner action.
    pub fn utility_vs(&self, alpha: &MixedStrategy, response: usize, role: Role) -> Result<f64, GameError> {
        self.check_optimizer_len(alpha.len())?;
        Ok(alpha
            .probs()
            .iter()
            .zip(self.payoffs(role))
            .map(|(a, row)| a * row[response])
            .sum())
    }

    /// All learner actions within [`TIE_TOL`] of the best learner utility.
    pub fn best_responses(&self, alpha: &MixedStrategy) -> Result<Vec<usize>, GameError> {
        let u = self.column_utilities(Role::Learner, alpha.probs())?;
        let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((0..u.len()).filter(|&j| u[j] >= best - TIE_TOL).collect())
    }

    /// Returns a dominating mixture (zero on `action`) when `action` is weakly
    /// dominated, `None` otherwise.
    pub fn weak_dominance_certificate(
        &self,
        action: usize,
    ) -> Result<Option<MixedStrategy>, GameError> {
        let n = self.num_learner_actions();
        if n < 2 {
            return Err(GameError::Invalid(
                "weak dominance needs at least two learner actions".into(),
            ));
        }
        if action >= n {
            return Err(GameError::Dimension { expected: n, got: action + 1 });
        }
        // Feasibility only: maximize 0 over the simplex on the other actions.
        let mut lp = LinearProgram::maximize(vec![0.0; n]);
        lp.set_bounds(action, Bounds::new(0.0, 0.0));
        lp.add_constraint(
            (0..n).map(|k| if k == action { 0.0 } else { 1.0 }).collect(),
            Sense::Eq,
            1.0,
        );
        for row in &self.learner_payoffs {
            lp.add_constraint(row.clone(), Sense::Ge, row[action]);
        }
        match lp.solve() {
            Ok(sol) => Ok(Some(MixedStrategy::from_weights(&sol.x)?)),
            Err(LpError::Infeasible) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    pub fn is_weakly_dominated(&self, action: usize) -> Result<bool, GameError> {
        Ok(self.weak_dominance_certificate(action)?.is_some())
    }

    /// Best commitment that induces `response`, if any commitment does.
    fn commitment_for(&self, response: usize) -> Result<Option<(MixedStrategy, f64)>, LpError> {
        let m = self.num_optimizer_actions();
        let n = self.num_learner_actions();
        let objective = self.optimizer_payoffs.iter().map(|r| r[response]).collect();
        let mut lp = LinearProgram::maximize(objective);
        lp.add_constraint(vec![1.0; m], Sense::Eq, 1.0);
        for k in (0..n).filter(|&k| k != response) {
            let coeffs = self
                .learner_payoffs
                .iter()
                .map(|r| r[k] - r[response])
                .collect();
            lp.add_constraint(coeffs, Sense::Le, 0.0);
        }
        match lp.solve() {
            Ok(sol) => {
                let alpha = MixedStrategy::from_weights(&sol.x)
                    .map_err(|e| LpError::Malformed(e.to_string()))?;
                Ok(Some((alpha, sol.objective)))
            }
            Err(LpError::Infeasible) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Stackelberg equilibrium under optimistic tie-breaking: the learner
    /// breaks indifference in the optimizer's favour. When several learner
    /// actions reach the optimal value (within [`TIE_TOL`]), the highest
    /// index wins.
    pub fn stackelberg(&self) -> Result<StackelbergSolution, GameError> {
        let mut best: Option<StackelbergSolution> = None;
        let mut failures = Vec::new();
        for j in 0..self.num_learner_actions() {
            match self.commitment_for(j) {
                Ok(Some((alpha, _))) => {
                    let value = self.utility_vs(&alpha, j, Role::Optimizer)?;
                    let better = best.as_ref().is_none_or(|b| value >= b.value - TIE_TOL);
                    if better {
                        best = Some(StackelbergSolution {
                            commitment: alpha,
                            response: j,
                            value,
                        });
                    }
                }
                Ok(None) => {}
                Err(e) => failures.push(format!("{}: {e}", self.learner_actions[j])),
            }
        }
        best.ok_or_else(|| GameError::NoStackelberg(failures.join("; ")))
    }

    /// Mixes `delta` of a max-margin strategy into the Stackelberg commitment
    /// so that the Stackelberg response becomes the unique best response.
    pub fn conservative_commitment(&self, delta: f64) -> Result<Commitment, GameError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(GameError::Invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        let stack = self.stackelberg()?;
        let target = stack.response;
        let m = self.num_optimizer_actions();
        let n = self.num_learner_actions();
        if n == 1 {
            return Ok(Commitment {
                strategy: stack.commitment.clone(),
                target_response: target,
                margin: f64::INFINITY,
                delta,
                perturbation: stack.commitment,
            });
        }
        // Variables: alpha' (m entries), kappa (free). Maximize kappa.
        let mut objective = vec![0.0; m + 1];
        objective[m] = 1.0;
        let mut lp = LinearProgram::maximize(objective);
        lp.set_bounds(m, Bounds::FREE);
        let mut simplex = vec![1.0; m + 1];
        simplex[m] = 0.0;
        lp.add_constraint(simplex, Sense::Eq, 1.0);
        for k in (0..n).filter(|&k| k != target) {
            let mut coeffs: Vec<f64> = self
                .learner_payoffs
                .iter()
                .map(|r| r[k] - r[target])
                .collect();
            coeffs.push(1.0);
            lp.add_constraint(coeffs, Sense::Le, 0.0);
        }
        let sol = lp.solve()?;
        let kappa = sol.x[m];
        if kappa <= 1e-12 {
            return Err(GameError::DominatedStrategy {
                action: self.learner_actions[target].clone(),
                margin: kappa,
            });
        }
        let perturbation = MixedStrategy::from_weights(&sol.x[..m])?;
        let strategy = stack.commitment.mix(&perturbation, delta)?;
        Ok(Commitment {
            strategy,
            target_response: target,
            margin: delta * kappa,
            delta,
            perturbation,
        })
    }

    /// Stackelberg value by exhaustive search over the simplex grid with step
    /// `1/resolution`, with exact best-response enumeration at each point.
    pub fn stackelberg_grid_value(&self, resolution: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut u_l = vec![0.0; self.num_learner_actions()];
        let mut u_o = vec![0.0; self.num_learner_actions()];
        for alpha in simplex_grid(self.num_optimizer_actions(), resolution) {
            self.column_utilities_into(Role::Learner, &alpha, &mut u_l);
            self.column_utilities_into(Role::Optimizer, &alpha, &mut u_o);
            let top = u_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for j in 0..u_l.len() {
                if u_l[j] >= top - TIE_TOL {
                    best = best.max(u_o[j]);
                }
            }
        }
        best
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Every point of the probability simplex in `dim` dimensions whose entries
/// are multiples of `1/resolution`.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, res: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.iter().map(|&k| k as f64 / res as f64).collect());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim, left - k, res, prefix, out);
            prefix.pop();
        }
    }
    assert!(dim > 0 && resolution > 0);
    let mut out = Vec::new();
    rec(dim, resolution, resolution, &mut Vec::with_capacity(dim), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half() -> MixedStrategy {
        MixedStrategy::uniform(2)
    }

    #[test]
    fn utility_examples_on_table1() {
        let g = Game::table1(0.05).unwrap();
        let right = MixedStrategy::pure(3, 2);
        let mid = MixedStrategy::pure(3, 1);
        assert_eq!(g.utility(&half(), &right, Role::Optimizer).unwrap(), 0.0);
        assert_eq!(g.utility(&half(), &mid, Role::Optimizer).unwrap(), -2.0);
        for i in 0..2 {
            for j in 0..3 {
                let u = g
                    .utility(&MixedStrategy::pure(2, i), &MixedStrategy::pure(3, j), Role::Learner)
                    .unwrap();
                assert_eq!(u, g.payoff(Role::Learner, i, j));
            }
        }
    }

    #[test]
    fn utility_rejects_wrong_lengths() {
        let g = Game::table1(0.05).unwrap();
        let err = g.utility(&MixedStrategy::uniform(3), &MixedStrategy::uniform(3), Role::Optimizer);
        assert!(matches!(err, Err(GameError::Dimension { expected: 2, got: 3 })));
        let err = g.utility(&half(), &half(), Role::Optimizer);
        assert!(matches!(err, Err(GameError::Dimension { expected: 3, got: 2 })));
    }

    #[test]
    fn best_response_examples() {
        let g = Game::table1(0.05).unwrap();
        assert_eq!(g.best_responses(&half()).unwrap(), vec![1, 2]);
        let single = Game::new(
            names(&["x", "y"]),
            names(&["only"]),
            vec![vec![1.0], vec![0.0]],
            vec![vec![0.5], vec![-0.5]],
            1.0,
        )
        .unwrap();
        assert_eq!(single.best_responses(&half()).unwrap(), vec![0]);
        assert_eq!(Game::matching_pennies().best_responses(&half()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn weak_dominance_examples() {
        let g = Game::table1(0.05).unwrap();
        for j in 0..3 {
            assert!(!g.is_weakly_dominated(j).unwrap(), "column {j}");
        }
        let twins = Game::new(
            names(&["x", "y"]),
            names(&["p", "q", "r"]),
            vec![vec![0.0; 3], vec![0.0; 3]],
            vec![vec![1.0, 1.0, 0.0], vec![-1.0, -1.0, 1.0]],
            1.0,
        )
        .unwrap();
        assert!(twins.is_weakly_dominated(0).unwrap());
        assert!(twins.is_weakly_dominated(1).unwrap());
        let cert = twins.weak_dominance_certificate(0).unwrap().unwrap();
        assert_eq!(cert.probs()[0], 0.0);

        let worse = Game::new(
            names(&["x", "y"]),
            names(&["p", "q"]),
            vec![vec![0.0; 2], vec![0.0; 2]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            1.0,
        )
        .unwrap();
        assert!(worse.is_weakly_dominated(1).unwrap());
        assert!(!worse.is_weakly_dominated(0).unwrap());
    }

    #[test]
    fn table1_stackelberg() {
        let s = Game::table1(0.05).unwrap().stackelberg().unwrap();
        assert!(s.value.abs() < 1e-9);
        assert_eq!(s.response, 2);
        assert!((s.commitment.probs()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn matching_pennies_stackelberg_is_minimax() {
        let s = Game::matching_pennies().stackelberg().unwrap();
        assert!(s.value.abs() < 1e-9);
        assert!((s.commitment.probs()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn commitment_game_stackelberg() {
        let s = Game::commitment_2x2().stackelberg().unwrap();
        assert!((s.value - 2.5).abs() < 1e-9);
        assert_eq!(s.response, 1);
    }

    #[test]
    fn conservative_commitment_on_table1() {
        let eps = 0.05;
        let g = Game::table1(eps).unwrap();
        let c = g.conservative_commitment(0.1).unwrap();
        let a = c.perturbation.probs()[0];
        assert!(a > 0.5 && a < 1.0 / (1.0 + eps));
        // Max-margin point equalizes the two constraints: a = 2 / (3 + eps).
        assert!((a - 2.0 / (3.0 + eps)).abs() < 1e-9);
        assert!((c.margin - 0.1 * (1.0 - eps) / (3.0 + eps)).abs() < 1e-9);
        assert_eq!(g.best_responses(&c.strategy).unwrap(), vec![2]);

        let c = g.conservative_commitment(0.5).unwrap();
        let u = g.utility_vs(&c.strategy, 2, Role::Optimizer).unwrap();
        let u_prime = g.utility_vs(&c.perturbation, 2, Role::Optimizer).unwrap();
        assert!((u - 0.5 * u_prime).abs() < 1e-12);
        // Loss bookkeeping: V - u = delta * (V - u_O(alpha', b)) with V = 0.
        assert!(((0.0 - u) - 0.5 * (0.0 - u_prime)).abs() < 1e-12);
    }

    #[test]
    fn conservative_commitment_when_response_is_already_unique() {
        // Learner strictly prefers column 0 whatever happens.
        let g = Game::new(
            names(&["x", "y"]),
            names(&["p", "q"]),
            vec![vec![1.0, 0.0], vec![0.5, 0.0]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            1.0,
        )
        .unwrap();
        let c = g.conservative_commitment(0.2).unwrap();
        assert_eq!(c.target_response, 0);
        assert!(c.margin >= 0.2 * 1.0 - 1e-12);
    }

    #[test]
    fn conservative_commitment_rejects_dominated_response() {
        // Columns identical for the learner; the optimizer prefers column 1.
        let g = Game::new(
            names(&["x"]),
            names(&["p", "q"]),
            vec![vec![0.0, 1.0]],
            vec![vec![0.0, 0.0]],
            1.0,
        )
        .unwrap();
        assert!(matches!(
            g.conservative_commitment(0.1),
            Err(GameError::DominatedStrategy { .. })
        ));
        assert!(g.conservative_commitment(1.0).is_err());
    }

    #[test]
    fn game_validation() {
        let bad = Game::new(names(&["x"]), names(&["p"]), vec![vec![3.0]], vec![vec![0.0]], 2.0);
        assert!(bad.is_err());
        let dup = Game::new(
            names(&["x", "x"]),
            names(&["p"]),
            vec![vec![0.0], vec![0.0]],
            vec![vec![0.0], vec![0.0]],
            1.0,
        );
        assert!(dup.is_err());
        let json = r#"{"optimizer_actions":["a"],"learner_actions":["b"],
            "optimizer_payoffs":[[5.0]],"learner_payoffs":[[0.0]],"scale":2.0}"#;
        assert!(Game::from_json_str(json).is_err());
    }

    #[test]
    fn json_round_trip() {
        for g in [Game::table1(0.05).unwrap(), Game::matching_pennies(), Game::commitment_2x2()] {
            let back = Game::from_json_str(&g.to_json_pretty()).unwrap();
            assert_eq!(back, g);
        }
    }

    #[test]
    fn mixed_strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.6]).is_err());
        assert!(MixedStrategy::new(vec![-0.1, 1.1]).is_err());
        assert!(MixedStrategy::new(vec![0.25, 0.75]).is_ok());
        assert!(serde_json::from_str::<MixedStrategy>("[0.2, 0.2]").is_err());
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(1, 5).len(), 1);
        assert_eq!(simplex_grid(2, 10).len(), 11);
        assert_eq!(simplex_grid(3, 10).len(), 66);
    }

    /// Pure Nash equilibria by enumeration.
    fn pure_nash_values(g: &Game) -> Vec<f64> {
        let (m, n) = (g.num_optimizer_actions(), g.num_learner_actions());
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..n {
                let row_best = (0..m).all(|k| g.payoff(Role::Optimizer, k, j) <= g.payoff(Role::Optimizer, i, j));
                let col_best = (0..n).all(|k| g.payoff(Role::Learner, i, k) <= g.payoff(Role::Learner, i, j));
                if row_best && col_best {
                    out.push(g.payoff(Role::Optimizer, i, j));
                }
            }
        }
        out
    }

    /// Minimax value max_alpha min_j u_O(alpha, b_j) by a separate LP.
    fn minimax_value(g: &Game) -> f64 {
        let m = g.num_optimizer_actions();
        let mut obj = vec![0.0; m + 1];
        obj[m] = 1.0;
        let mut lp = LinearProgram::maximize(obj);
        lp.set_bounds(m, Bounds::FREE);
        let mut s = vec![1.0; m + 1];
        s[m] = 0.0;
        lp.add_constraint(s, Sense::Eq, 1.0);
        for j in 0..g.num_learner_actions() {
            let mut c: Vec<f64> = (0..m).map(|i| -g.payoff(Role::Optimizer, i, j)).collect();
            c.push(1.0);
            lp.add_constraint(c, Sense::Le, 0.0);
        }
        lp.solve().unwrap().objective
    }

    fn arb_game() -> impl Strategy<Value = Game> {
        (1usize..=4, 1usize..=4, any::<u64>()).prop_map(|(m, n, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Game::random_integer(m, n, 2, &mut rng).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn stackelberg_beats_pure_nash(g in arb_game()) {
            let s = g.stackelberg().unwrap();
            for v in pure_nash_values(&g) {
                prop_assert!(s.value >= v - 1e-9);
            }
            prop_assert!(g.best_responses(&s.commitment).unwrap().contains(&s.response));
        }

        #[test]
        fn constant_sum_stackelberg_is_minimax(seed in any::<u64>(), m in 1usize..=4, n in 1usize..=4, c in -1i32..=1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = Game::random_integer(m, n, 2, &mut rng).unwrap();
            let u_o = base.payoffs(Role::Optimizer).to_vec();
            let u_l: Vec<Vec<f64>> = u_o.iter().map(|r| r.iter().map(|v| c as f64 - v).collect()).collect();
            let g = Game::new(base.optimizer_actions().to_vec(), base.learner_actions().to_vec(), u_o, u_l, 3.0).unwrap();
            prop_assert!(g.constant_sum().is_some());
            let s = g.stackelberg().unwrap();
            prop_assert!((s.value - minimax_value(&g)).abs() < 1e-8);
        }

        #[test]
        fn utility_is_bilinear(g in arb_game(), w in 0.0f64..=1.0, s1 in any::<u64>(), s2 in any::<u64>()) {
            let m = g.num_optimizer_actions();
            let n = g.num_learner_actions();
            let draw = |seed: u64, k: usize| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
                MixedStrategy::from_weights(&v).unwrap()
            };
            let (a1, a2, beta) = (draw(s1, m), draw(s2, m), draw(s1 ^ s2, n));
            let mixed = a1.mix(&a2, w).unwrap();
            for role in [Role::Optimizer, Role::Learner] {
                let lhs = g.utility(&mixed, &beta, role).unwrap();
                let rhs = (1.0 - w) * g.utility(&a1, &beta, role).unwrap() + w * g.utility(&a2, &beta, role).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }

        #[test]
        fn scaling_scales_value_and_keeps_argmax(g in arb_game(), c in 0.25f64..4.0) {
            let s = g.stackelberg().unwrap();
            let scaled = g.scaled(c).unwrap().stackelberg().unwrap();
            prop_assert!((scaled.value - c * s.value).abs() < 1e-8 * (1.0 + c));
            // The original optimum stays optimal in the scaled game.
            let g2 = g.scaled(c).unwrap();
            prop_assert!(g2.best_responses(&s.commitment).unwrap().contains(&s.response));
            prop_assert!((g2.utility_vs(&s.commitment, s.response, Role::Optimizer).unwrap() - scaled.value).abs() < 1e-8 * (1.0 + c));
        }

        #[test]
        fn commitment_margin_holds(g in arb_game(), delta in 0.01f64..0.99) {
            if let Ok(c) = g.conservative_commitment(delta) {
                let u = g.column_utilities(Role::Learner, c.strategy.probs()).unwrap();
                for (k, v) in u.iter().enumerate() {
                    if k != c.target_response {
                        prop_assert!(u[c.target_response] - v >= c.margin - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn random_3x3_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let g = Game::random_integer(3, 3, 2, &mut rng).unwrap();
        let s = g.stackelberg().unwrap();
        let oracle = g.stackelberg_grid_value(200);
        assert!((s.value - oracle).abs() <= 1e-2, "{} vs {}", s.value, oracle);
        assert!(oracle <= s.value + 1e-9);
    }
}
