use serde::{Deserialize, Serialize};

use super::geometry::{reduce, ControlState, REGION_TOL};
use super::ControlError;
use crate::game::{Game, MixedStrategy, Role};
use crate::optimizers::{Policy, PolicyStep};

/// Closure tolerance for `P_k = lambda P_0`.
pub const CYCLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedStep {
    pub alpha: MixedStrategy,
    pub duration: f64,
    /// Learner action whose region holds the whole step.
    pub label: usize,
    /// `u_O(alpha, b_label)`.
    pub utility: f64,
}

/// A policy cut into region-consistent steps, with the waypoints
/// `P_0, ..., P_k` between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPolicy {
    pub steps: Vec<AnnotatedStep>,
    pub waypoints: Vec<ControlState>,
}

impl AnnotatedPolicy {
    pub fn start(&self) -> &ControlState {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &ControlState {
        self.waypoints.last().expect("waypoints are never empty")
    }

    pub fn labels(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.label).collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    /// `sum_i t_i u_O(alpha_i, b_{j_i})`.
    pub fn total_utility(&self) -> f64 {
        self.steps.iter().map(|s| s.duration * s.utility).sum()
    }

    /// Average optimizer utility per unit time.
    pub fn value(&self) -> f64 {
        self.total_utility() / self.total_duration()
    }

    /// Drops the labels.
    pub fn to_policy(&self) -> Result<Policy, ControlError> {
        Ok(Policy::new(
            self.steps
                .iter()
                .map(|s| PolicyStep::new(s.alpha.clone(), s.duration))
                .collect(),
        )?)
    }

    pub fn merged(&self) -> AnnotatedPolicy {
        merge(self)
    }
}

/// Annotates a policy started at the origin.
pub fn subdivide(policy: &Policy, game: &Game) -> Result<AnnotatedPolicy, ControlError> {
    subdivide_from(policy, game, &ControlState::origin(game.num_learner_actions()))
}

/// Splits every step where the state crosses a region boundary and labels
/// each piece with the optimizer-best region containing it (lowest index on
/// ties). Zero-duration steps are dropped. Pieces of one step that end up
/// with the same label are kept together.
pub fn subdivide_from(
    policy: &Policy,
    game: &Game,
    start: &ControlState,
) -> Result<AnnotatedPolicy, ControlError> {
    policy.check_game(game)?;
    let n = game.num_learner_actions();
    if start.len() + 1 != n {
        return Err(ControlError::Dimension { expected: n - 1, got: start.len() });
    }
    let mut steps = Vec::new();
    let mut waypoints = vec![start.clone()];
    let mut learner = vec![0.0; n];
    let mut optimizer = vec![0.0; n];
    for step in policy.steps() {
        if step.duration <= 0.0 {
            continue;
        }
        let alpha = step.alpha.probs();
        game.column_utilities_into(Role::Learner, alpha, &mut learner);
        game.column_utilities_into(Role::Optimizer, alpha, &mut optimizer);
        let mut slope = reduce(&learner);
        slope.push(0.0);
        let origin = waypoints.last().expect("non-empty").lifted();
        let pieces = walk(&origin, &slope, step.duration, &optimizer);
        let mut elapsed = 0.0;
        for (label, end) in pieces {
            steps.push(AnnotatedStep {
                alpha: step.alpha.clone(),
                duration: end - elapsed,
                label,
                utility: optimizer[label],
            });
            waypoints.push(ControlState((0..n - 1).map(|i| origin[i] + end * slope[i]).collect()));
            elapsed = end;
        }
    }
    Ok(AnnotatedPolicy { steps, waypoints })
}

/// Splits `[0, duration]` into pieces with a constant set of leading
/// coordinates. Returns `(label, end time)` per piece, merging neighbours
/// with equal labels.
fn walk(origin: &[f64], slope: &[f64], duration: f64, utility: &[f64]) -> Vec<(usize, f64)> {
    let n = origin.len();
    let mut pieces: Vec<(usize, f64)> = Vec::new();
    let mut s = 0.0;
    loop {
        let value: Vec<f64> = (0..n).map(|k| origin[k] + s * slope[k]).collect();
        let top = value.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let leaders: Vec<usize> = (0..n).filter(|&k| value[k] >= top - REGION_TOL).collect();
        let lead_slope = leaders.iter().map(|&k| slope[k]).fold(f64::NEG_INFINITY, f64::max);
        let mut label = usize::MAX;
        for &k in &leaders {
            if slope[k] >= lead_slope - REGION_TOL && (label == usize::MAX || utility[k] > utility[label]) {
                label = k;
            }
        }
        let mut exit = duration;
        for k in 0..n {
            if value[k] < top - REGION_TOL && slope[k] > lead_slope + REGION_TOL {
                let root = s + (top - value[k]) / (slope[k] - lead_slope);
                exit = exit.min(root);
            }
        }
        match pieces.last_mut() {
            Some(last) if last.0 == label => last.1 = exit,
            _ => pieces.push((label, exit)),
        }
        if exit >= duration {
            break;
        }
        s = exit;
    }
    pieces
}

/// Merges consecutive steps with equal labels into one step playing the
/// duration-weighted average strategy. The value is unchanged.
pub fn merge(policy: &AnnotatedPolicy) -> AnnotatedPolicy {
    let mut steps: Vec<AnnotatedStep> = Vec::with_capacity(policy.steps.len());
    let mut waypoints = vec![policy.waypoints[0].clone()];
    for (step, end) in policy.steps.iter().zip(&policy.waypoints[1..]) {
        match steps.last_mut() {
            Some(last) if last.label == step.label => {
                let total = last.duration + step.duration;
                let weights: Vec<f64> = last
                    .alpha
                    .probs()
                    .iter()
                    .zip(step.alpha.probs())
                    .map(|(a, b)| last.duration * a + step.duration * b)
                    .collect();
                last.alpha = MixedStrategy::from_weights(&weights).expect("positive durations");
                last.utility = (last.duration * last.utility + step.duration * step.utility) / total;
                last.duration = total;
                *waypoints.last_mut().expect("non-empty") = end.clone();
            }
            _ => {
                steps.push(step.clone());
                waypoints.push(end.clone());
            }
        }
    }
    AnnotatedPolicy { steps, waypoints }
}

/// Average optimizer utility per unit time of a policy started at the origin.
pub fn evaluate(policy: &Policy, game: &Game) -> Result<f64, ControlError> {
    Ok(subdivide(policy, game)?.value())
}

/// A policy leading from `P` to `lambda P` with `lambda >= 1`; repeating it
/// (scaled by `lambda` each lap) sustains its average utility forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCertificate {
    pub value: f64,
    pub lambda: f64,
    pub annotated: AnnotatedPolicy,
}

/// Checks that `policy` run from `start` ends at `lambda * start` with
/// `lambda >= 1` and returns the certificate.
pub fn certify_cycle(
    policy: &Policy,
    start: &ControlState,
    game: &Game,
) -> Result<CycleCertificate, ControlError> {
    let annotated = subdivide_from(policy, game, start)?;
    let end = annotated.end();
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let p_norm = norm(start);
    let lambda = if p_norm <= 1e-12 {
        if norm(end) > CYCLE_TOL {
            return Err(ControlError::InvalidCycle(format!(
                "starts at the origin but ends at {:?}",
                end.0
            )));
        }
        1.0
    } else {
        let dot: f64 = start.iter().zip(end.iter()).map(|(a, b)| a * b).sum();
        let sq: f64 = start.iter().map(|a| a * a).sum();
        let lambda = dot / sq;
        let gap = norm(&start.iter().zip(end.iter()).map(|(p, e)| e - lambda * p).collect::<Vec<_>>());
        if gap > CYCLE_TOL * p_norm.max(1.0) {
            return Err(ControlError::InvalidCycle(format!(
                "end point {:?} is not a multiple of the start {:?}",
                end.0, start.0
            )));
        }
        if lambda < 1.0 - CYCLE_TOL {
            return Err(ControlError::InvalidCycle(format!("shrinks the state by {lambda}")));
        }
        lambda.max(1.0)
    };
    Ok(CycleCertificate {
        value: annotated.value(),
        lambda,
        annotated,
    })
}

/// Average utility of a cycle from `start`; errors if the policy does not
/// end at `lambda * start` for some `lambda >= 1`.
pub fn cycle_value(policy: &Policy, start: &ControlState, game: &Game) -> Result<f64, ControlError> {
    Ok(certify_cycle(policy, start, game)?.value)
}
