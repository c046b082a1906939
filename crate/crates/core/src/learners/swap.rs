//! Swap-regret reduction: one inner no-regret learner per arm, combined
//! through the stationary distribution of the matrix of their plays.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{check_arms, sample_index, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::MixedStrategy;

/// Largest chain solved directly; bigger chains use power iteration.
const DIRECT_SOLVE_MAX: usize = 64;
const STATIONARY_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 1_000_000;

/// Stationary distribution `p = pQ` of a row-stochastic matrix.
///
/// Small chains are solved directly. When the chain has several recurrent
/// classes the system is singular and the minimum-norm least-squares solution
/// is returned instead, which for the identity is the uniform distribution.
pub fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>, LearnerError> {
    let k = q.len();
    if k == 0 {
        return Err(LearnerError::Config("empty transition matrix".into()));
    }
    for row in q {
        check_arms(k, row.len())?;
    }
    let candidate = if k <= DIRECT_SOLVE_MAX {
        direct_solve(q).or_else(|| min_norm_solve(q))
    } else {
        Some(power_iteration(q))
    };
    let p = candidate.map(normalize).unwrap_or_default();
    let residual = if p.len() == k { stationary_residual(q, &p) } else { f64::INFINITY };
    if !(residual <= STATIONARY_TOL) {
        return Err(LearnerError::Stationary { residual, arms: k });
    }
    Ok(p)
}

/// `‖pQ − p‖₁`.
pub fn stationary_residual(q: &[Vec<f64>], p: &[f64]) -> f64 {
    (0..q.len())
        .map(|j| {
            let pq: f64 = (0..q.len()).map(|i| p[i] * q[i][j]).sum();
            (pq - p[j]).abs()
        })
        .sum()
}

fn transposed_generator(q: &[Vec<f64>], rows: usize) -> DMatrix<f64> {
    let k = q.len();
    DMatrix::from_fn(rows, k, |r, c| {
        if r >= k {
            1.0
        } else {
            q[c][r] - if r == c { 1.0 } else { 0.0 }
        }
    })
}

// (Q^T - I) p = 0 with the last equation replaced by sum(p) = 1.
fn direct_solve(q: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = q.len();
    let mut a = transposed_generator(q, k);
    a.row_mut(k - 1).fill(1.0);
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let x: Vec<f64> = x.iter().copied().collect();
    if x.iter().all(|v| v.is_finite() && *v > -STATIONARY_TOL)
        && stationary_residual(q, &x) <= STATIONARY_TOL
    {
        Some(x)
    } else {
        None
    }
}

fn min_norm_solve(q: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = q.len();
    let a = transposed_generator(q, k + 1);
    let mut b = DVector::zeros(k + 1);
    b[k] = 1.0;
    let x = a.svd(true, true).solve(&b, 1e-10).ok()?;
    Some(x.iter().copied().collect())
}

fn power_iteration(q: &[Vec<f64>]) -> Vec<f64> {
    let k = q.len();
    let mut p = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..POWER_MAX_ITERS {
        next.fill(0.0);
        for (i, row) in q.iter().enumerate() {
            for (j, qij) in row.iter().enumerate() {
                next[j] += p[i] * qij;
            }
        }
        // Lazy step so periodic chains converge too.
        let mut change = 0.0;
        for j in 0..k {
            let v = 0.5 * (p[j] + next[j]);
            change += (v - p[j]).abs();
            p[j] = v;
        }
        if change < POWER_TOL {
            break;
        }
    }
    p
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|v| *v /= total);
    }
    p
}

/// Blum–Mansour reduction. Instance `i` proposes row `i` of `Q`; the wrapper
/// plays `p = pQ` and charges instance `i` the rewards scaled by `p_i`.
pub struct BlumMansour {
    instances: Vec<Box<dyn Learner>>,
    pending: Option<Vec<f64>>,
    last_residual: f64,
    rng: ChaCha8Rng,
}

impl BlumMansour {
    pub fn new(instances: Vec<Box<dyn Learner>>, rng: ChaCha8Rng) -> Self {
        BlumMansour {
            instances,
            pending: None,
            last_residual: 0.0,
            rng,
        }
    }

    /// `‖pQ − p‖₁` of the most recent round.
    pub fn last_residual(&self) -> f64 {
        self.last_residual
    }
}

impl Learner for BlumMansour {
    fn name(&self) -> &'static str {
        "BlumMansour"
    }

    fn num_arms(&self) -> usize {
        self.instances.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Experts
    }

    fn strategy(&mut self, ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        let k = self.instances.len();
        let mut q = Vec::with_capacity(k);
        for inner in &mut self.instances {
            let row = inner.strategy(ctx)?;
            check_arms(k, row.len())?;
            q.push(row.probs().to_vec());
        }
        let p = stationary_distribution(&q)?;
        self.last_residual = stationary_residual(&q, &p);
        let dist = MixedStrategy::from_weights(&p)?;
        self.pending = Some(p);
        Ok(dist)
    }

    fn choose(&mut self, dist: &MixedStrategy) -> usize {
        sample_index(&mut self.rng, dist)
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Experts(rewards) = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "BlumMansour",
                expected: FeedbackMode::Experts,
            });
        };
        check_arms(self.instances.len(), rewards.len())?;
        let p = self.pending.take().ok_or(LearnerError::NoPendingRound)?;
        let mut scaled = vec![0.0; rewards.len()];
        for (inner, pi) in self.instances.iter_mut().zip(&p) {
            scaled.iter_mut().zip(rewards).for_each(|(s, r)| *s = pi * r);
            inner.observe(Feedback::Experts(&scaled))?;
        }
        Ok(())
    }
}
