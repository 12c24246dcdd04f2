use crate::error::{Error, Result};
use crate::model::Reward;
use crate::scalar::Scalar;

/// Pull counts and reward sums of a learner, plus the global step counter.
///
/// Reward sums are kept as integers, so `μ̄(a)·N(a)` is always exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    counts: Vec<u64>,
    sums: Vec<u64>,
    t: u64,
}

impl AgentState {
    pub fn new(arms: usize) -> Self {
        Self {
            counts: vec![0; arms],
            sums: vec![0; arms],
            t: 1,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    /// Global step `t = 1 + Σ N(a)`.
    #[inline]
    pub fn t(&self) -> u64 {
        self.t
    }

    #[inline]
    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn reward_sum(&self, arm: usize) -> u64 {
        self.sums[arm]
    }

    /// Empirical mean, `None` while the arm is unpulled.
    #[inline]
    pub fn mean<S: Scalar>(&self, arm: usize) -> Option<S> {
        match self.counts[arm] {
            0 => None,
            n => Some(S::from_count(self.sums[arm]) / S::from_count(n)),
        }
    }

    /// Lowest-indexed arm never pulled.
    #[inline]
    pub fn first_unpulled(&self) -> Option<usize> {
        self.counts.iter().position(|&n| n == 0)
    }

    /// Records one pull.
    pub fn update(&mut self, arm: usize, reward: Reward) -> Result<()> {
        if arm >= self.counts.len() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.counts.len(),
            });
        }
        if reward > 1 {
            return Err(Error::Invalid(format!("reward {reward} is not 0 or 1")));
        }
        self.record(arm, reward);
        Ok(())
    }

    #[inline]
    pub(crate) fn record(&mut self, arm: usize, reward: Reward) {
        self.counts[arm] += 1;
        self.sums[arm] += u64::from(reward);
        self.t += 1;
    }

    pub fn reset(&mut self) {
        self.counts.fill(0);
        self.sums.fill(0);
        self.t = 1;
    }
}
