use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_arms, Feedback, FeedbackMode, Learner, LearnerError, RoundContext};
use crate::game::MixedStrategy;

/// Follow the perturbed leader: each round plays `argmax_i sigma_i + U_i`
/// with fresh `U_i ~ Uniform[0, width]`.
///
/// The play distribution is computed exactly. For arm `i`, with
/// `c_l = (sigma_i - sigma_l) / width`,
/// `P(i) = ∫_0^1 Π_{l≠i} clamp(c_l + w, 0, 1) dw`, a piecewise polynomial
/// integrated piece by piece.
#[derive(Debug, Clone)]
pub struct FollowPerturbedLeader {
    width: f64,
    sigma: Vec<f64>,
    rng: ChaCha8Rng,
}

impl FollowPerturbedLeader {
    pub fn new(num_arms: usize, width: f64, rng: ChaCha8Rng) -> Self {
        FollowPerturbedLeader {
            width,
            sigma: vec![0.0; num_arms],
            rng,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.sigma
    }

    pub fn set_cumulative(&mut self, sigma: &[f64]) {
        self.sigma.copy_from_slice(sigma);
    }

    pub fn distribution(&self) -> Vec<f64> {
        (0..self.sigma.len())
            .map(|i| win_probability(&self.sigma, i, self.width))
            .collect()
    }

    /// One perturbed-leader draw.
    pub fn sample_leader(&mut self) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, s) in self.sigma.iter().enumerate() {
            let score = s + self.width * self.rng.gen::<f64>();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }
}

fn win_probability(sigma: &[f64], i: usize, width: f64) -> f64 {
    let offsets: Vec<f64> = sigma
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != i)
        .map(|(_, s)| (sigma[i] - s) / width)
        .collect();
    let mut cuts = vec![0.0, 1.0];
    for c in &offsets {
        for w in [-c, 1.0 - c] {
            if w > 0.0 && w < 1.0 {
                cuts.push(w);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    'piece: for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        // Polynomial in w, lowest degree first.
        let mut poly = vec![1.0];
        for c in &offsets {
            let v = c + mid;
            if v <= 0.0 {
                continue 'piece;
            }
            if v < 1.0 {
                let mut next = vec![0.0; poly.len() + 1];
                for (d, a) in poly.iter().enumerate() {
                    next[d] += a * c;
                    next[d + 1] += a;
                }
                poly = next;
            }
        }
        total += poly
            .iter()
            .enumerate()
            .map(|(d, a)| {
                let e = (d + 1) as i32;
                a * (hi.powi(e) - lo.powi(e)) / e as f64
            })
            .sum::<f64>();
    }
    total
}

impl Learner for FollowPerturbedLeader {
    fn name(&self) -> &'static str {
        "FTPL"
    }

    fn num_arms(&self) -> usize {
        self.sigma.len()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Experts
    }

    fn strategy(&mut self, _ctx: &RoundContext<'_>) -> Result<MixedStrategy, LearnerError> {
        Ok(MixedStrategy::from_weights(&self.distribution())?)
    }

    /// Sampling draws the perturbation directly, which has the same law as
    /// sampling from the exact distribution.
    fn choose(&mut self, _dist: &MixedStrategy) -> usize {
        self.sample_leader()
    }

    fn observe(&mut self, feedback: Feedback<'_>) -> Result<(), LearnerError> {
        let Feedback::Experts(rewards) = feedback else {
            return Err(LearnerError::FeedbackMismatch {
                algorithm: "FTPL",
                expected: FeedbackMode::Experts,
            });
        };
        check_arms(self.sigma.len(), rewards.len())?;
        self.sigma.iter_mut().zip(rewards).for_each(|(s, r)| *s += r);
        Ok(())
    }
}
