use std::io::{Read, Write};
use std::path::Path;

use super::LearnerError;

/// Tolerance between stored and recomputed cumulative rewards.
pub const CUMULATIVE_TOL: f64 = 1e-9;

/// Per-round record of one learner: the full reward vector of every round,
/// the pulled arm, and prefix sums of the rewards. Play distributions are
/// optional and needed only for the mean-based audit and expected regrets.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTrace {
    num_arms: usize,
    rewards: Vec<Vec<f64>>,
    chosen: Vec<usize>,
    cumulative: Vec<Vec<f64>>,
    probs: Option<Vec<Vec<f64>>>,
}

impl RewardTrace {
    pub fn new(num_arms: usize) -> Self {
        RewardTrace {
            num_arms,
            rewards: Vec::new(),
            chosen: Vec::new(),
            cumulative: Vec::new(),
            probs: None,
        }
    }

    /// A trace that also records the play distribution of every round.
    pub fn with_distributions(num_arms: usize) -> Self {
        RewardTrace {
            probs: Some(Vec::new()),
            ..Self::new(num_arms)
        }
    }

    /// Builds a trace from reward rows and pulled arms.
    pub fn from_rounds(rewards: Vec<Vec<f64>>, chosen: Vec<usize>) -> Result<Self, LearnerError> {
        let k = rewards.first().map_or(0, Vec::len);
        if rewards.len() != chosen.len() {
            return Err(LearnerError::Trace(format!(
                "{} reward rows but {} chosen arms",
                rewards.len(),
                chosen.len()
            )));
        }
        let mut trace = RewardTrace::new(k);
        for (r, c) in rewards.into_iter().zip(chosen) {
            trace.push(r, c, None)?;
        }
        Ok(trace)
    }

    /// Appends a round. `probs` must be given exactly when the trace records
    /// distributions.
    pub fn push(
        &mut self,
        rewards: Vec<f64>,
        chosen: usize,
        probs: Option<&[f64]>,
    ) -> Result<(), LearnerError> {
        let k = self.num_arms;
        if rewards.len() != k {
            return Err(LearnerError::ArmCount { expected: k, got: rewards.len() });
        }
        if chosen >= k {
            return Err(LearnerError::Trace(format!("chosen arm {chosen} out of range for {k} arms")));
        }
        match (&mut self.probs, probs) {
            (Some(all), Some(p)) if p.len() == k => all.push(p.to_vec()),
            (None, None) => {}
            (Some(_), Some(p)) => {
                return Err(LearnerError::ArmCount { expected: k, got: p.len() });
            }
            (Some(_), None) => {
                return Err(LearnerError::Trace("round is missing its play distribution".into()));
            }
            (None, Some(_)) => {
                return Err(LearnerError::Trace("trace does not record distributions".into()));
            }
        }
        let next: Vec<f64> = match self.cumulative.last() {
            Some(prev) => prev.iter().zip(&rewards).map(|(s, r)| s + r).collect(),
            None => rewards.clone(),
        };
        self.rewards.push(rewards);
        self.chosen.push(chosen);
        self.cumulative.push(next);
        Ok(())
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    /// `cumulative()[t][i]` is the sum of arm `i`'s rewards over rounds `0..=t`.
    pub fn cumulative(&self) -> &[Vec<f64>] {
        &self.cumulative
    }

    pub fn distributions(&self) -> Option<&[Vec<f64>]> {
        self.probs.as_deref()
    }

    /// Cumulative rewards after the whole trace (zeros if empty).
    pub fn totals(&self) -> Vec<f64> {
        self.cumulative.last().cloned().unwrap_or_else(|| vec![0.0; self.num_arms])
    }

    /// Checks the prefix sums and index ranges.
    pub fn validate(&self) -> Result<(), LearnerError> {
        let mut running = vec![0.0; self.num_arms];
        for (t, (row, sigma)) in self.rewards.iter().zip(&self.cumulative).enumerate() {
            if self.chosen[t] >= self.num_arms {
                return Err(LearnerError::Trace(format!("round {}: chosen arm out of range", t + 1)));
            }
            for i in 0..self.num_arms {
                running[i] += row[i];
                if (running[i] - sigma[i]).abs() > CUMULATIVE_TOL * (1.0 + running[i].abs()) {
                    return Err(LearnerError::Trace(format!(
                        "round {}: cumulative reward of arm {} is {}, rows sum to {}",
                        t + 1,
                        i,
                        sigma[i],
                        running[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes `t, chosen, p_1..p_K, r_1..r_K, sigma_1..sigma_K`, with `t`
    /// starting at 1 and arms indexed from 0. Missing distributions are
    /// written as empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), LearnerError> {
        let k = self.num_arms;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "chosen".to_string()];
        for prefix in ["p", "r", "sigma"] {
            header.extend((1..=k).map(|i| format!("{prefix}_{i}")));
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(2 + 3 * k);
        for t in 0..self.len() {
            record.clear();
            record.push((t + 1).to_string());
            record.push(self.chosen[t].to_string());
            match &self.probs {
                Some(p) => record.extend(p[t].iter().map(f64::to_string)),
                None => record.extend(std::iter::repeat_n(String::new(), k)),
            }
            record.extend(self.rewards[t].iter().map(f64::to_string));
            record.extend(self.cumulative[t].iter().map(f64::to_string));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), LearnerError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Parses the format written by [`RewardTrace::write_csv`] and checks the
    /// stored cumulative sums against the rewards.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, LearnerError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let k = header.iter().filter(|h| h.starts_with("r_")).count();
        let expected = 2 + 3 * k;
        if k == 0 || header.len() != expected || &header[0] != "t" || &header[1] != "chosen" {
            return Err(LearnerError::Trace(
                "header must be t,chosen,p_1..p_K,r_1..r_K,sigma_1..sigma_K".into(),
            ));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != expected {
                return Err(LearnerError::Trace(format!("row {} has {} fields", line + 1, rec.len())));
            }
            let parse = |s: &str| -> Result<f64, LearnerError> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| LearnerError::Trace(format!("row {}: bad number {s:?}", line + 1)))
            };
            let chosen: usize = rec[1]
                .trim()
                .parse()
                .map_err(|_| LearnerError::Trace(format!("row {}: bad arm {:?}", line + 1, &rec[1])))?;
            let probs = if rec.iter().skip(2).take(k).all(|s| s.trim().is_empty()) {
                None
            } else {
                Some(rec.iter().skip(2).take(k).map(parse).collect::<Result<Vec<_>, _>>()?)
            };
            let rewards = rec.iter().skip(2 + k).take(k).map(parse).collect::<Result<Vec<_>, _>>()?;
            let sigma = rec.iter().skip(2 + 2 * k).map(parse).collect::<Result<Vec<_>, _>>()?;
            rows.push((chosen, probs, rewards, sigma));
        }
        let with_probs = rows.first().is_some_and(|r| r.1.is_some());
        let mut trace = if with_probs {
            RewardTrace::with_distributions(k)
        } else {
            RewardTrace::new(k)
        };
        let mut stored = Vec::with_capacity(rows.len());
        for (chosen, probs, rewards, sigma) in rows {
            trace.push(rewards, chosen, probs.as_deref())?;
            stored.push(sigma);
        }
        trace.cumulative = stored;
        trace.validate()?;
        Ok(trace)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, LearnerError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums() {
        let t = RewardTrace::from_rounds(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]], vec![0, 0, 1])
            .unwrap();
        assert_eq!(t.cumulative()[2], vec![2.0, 1.0]);
        assert_eq!(t.totals(), vec![2.0, 1.0]);
        t.validate().unwrap();
    }

    #[test]
    fn rejects_bad_rounds() {
        let mut t = RewardTrace::new(2);
        assert!(t.push(vec![1.0], 0, None).is_err());
        assert!(t.push(vec![1.0, 0.0], 2, None).is_err());
        assert!(t.push(vec![1.0, 0.0], 0, Some(&[0.5, 0.5])).is_err());
        let mut t = RewardTrace::with_distributions(2);
        assert!(t.push(vec![1.0, 0.0], 0, None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut t = RewardTrace::with_distributions(3);
        t.push(vec![0.1, -0.2, 1.0 / 3.0], 2, Some(&[0.2, 0.3, 0.5])).unwrap();
        t.push(vec![1e-17, 2.5, -1.0], 0, Some(&[1.0, 0.0, 0.0])).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,chosen,p_1,p_2,p_3,r_1,r_2,r_3,sigma_1,sigma_2,sigma_3\n1,2,"));
        assert_eq!(RewardTrace::read_csv(buf.as_slice()).unwrap(), t);

        let plain = RewardTrace::from_rounds(vec![vec![1.0, 2.0]], vec![1]).unwrap();
        let mut buf = Vec::new();
        plain.write_csv(&mut buf).unwrap();
        assert_eq!(RewardTrace::read_csv(buf.as_slice()).unwrap(), plain);
    }

    #[test]
    fn csv_rejects_inconsistent_sums() {
        let text = "t,chosen,p_1,p_2,r_1,r_2,sigma_1,sigma_2\n1,0,,,1,0,1,0\n2,1,,,1,0,1,0\n";
        assert!(RewardTrace::read_csv(text.as_bytes()).is_err());
        let text = "t,chosen,r_1\n1,0,1\n";
        assert!(RewardTrace::read_csv(text.as_bytes()).is_err());
    }
}
