use rand::Rng;

use super::{argmax, PolicyKind, PolicySpec};
use crate::error::{Error, Result};
use crate::model::{binary_index, NextState, Reward};
use crate::scalar::Scalar;

/// Tabular `Q(s, a)` over the live states `{0, 1}` with visit counts.
/// The terminal state has `Q(g, ·) = 0` implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<S> {
    q: [Vec<S>; 2],
    visits: [Vec<u64>; 2],
}

impl<S: Scalar> QTable<S> {
    pub fn new(arms: usize, init: S) -> Self {
        Self {
            q: [vec![init; arms], vec![init; arms]],
            visits: [vec![0; arms], vec![0; arms]],
        }
    }

    pub fn num_arms(&self) -> usize {
        self.q[0].len()
    }

    #[inline]
    pub fn q(&self, state: usize, arm: usize) -> S {
        self.q[state][arm]
    }

    #[inline]
    pub fn visits(&self, state: usize, arm: usize) -> u64 {
        self.visits[state][arm]
    }

    /// `max_a Q(s, a)`, `0` for the terminal state.
    #[inline]
    pub fn value(&self, next: Option<usize>) -> S {
        match next {
            Some(s) => self.q[s].iter().copied().fold(S::neg_infinity(), S::max),
            None => S::zero(),
        }
    }

    pub fn reset(&mut self, init: S) {
        for s in 0..2 {
            self.q[s].fill(init);
            self.visits[s].fill(0);
        }
    }

    /// Greedy arm in `state`, lowest index on ties.
    #[inline]
    pub fn greedy(&self, state: usize) -> usize {
        argmax(self.q[state].iter().copied())
    }

    /// ε-greedy choice: one uniform draw decides exploration, a second picks the arm.
    #[inline]
    pub fn epsilon_greedy<R: Rng + ?Sized>(&self, state: usize, epsilon: S, rng: &mut R) -> usize {
        if S::uniform(rng) < epsilon {
            rng.random_range(0..self.num_arms())
        } else {
            self.greedy(state)
        }
    }

    /// Arm maximizing `Q(s,a) + bonus_c·√(H·ln t / N(s,a))`; unvisited pairs come first.
    #[inline]
    pub fn ucb_choice(&self, state: usize, bonus_c: S, horizon: S, t: u64) -> usize {
        if let Some(a) = self.visits[state].iter().position(|&n| n == 0) {
            return a;
        }
        let scale = horizon * S::from_count(t).ln().max(S::zero());
        argmax(
            self.q[state]
                .iter()
                .zip(&self.visits[state])
                .map(|(&q, &n)| q + bonus_c * (scale / S::from_count(n)).sqrt()),
        )
    }

    /// One Q-learning update with learning rate `alpha(N(s,a))` after incrementing the visit count.
    #[inline]
    pub(crate) fn update(
        &mut self,
        state: usize,
        arm: usize,
        reward: Reward,
        next: Option<usize>,
        kind: PolicyKind,
        horizon: S,
    ) {
        self.visits[state][arm] += 1;
        let n = S::from_count(self.visits[state][arm]);
        let alpha = match kind {
            PolicyKind::QUcb => (horizon + S::one()) / (horizon + n),
            _ => S::one() / n,
        };
        let target = S::from_count(u64::from(reward)) + self.value(next);
        let q = &mut self.q[state][arm];
        *q = (S::one() - alpha) * *q + alpha * target;
    }
}

/// Q-learning update `Q(s,a) ← (1−α)Q(s,a) + α(r + max Q(s',·))` for the
/// Q-EPS (`α = 1/N`) and Q-UCB (`α = (H+1)/(H+N)`) kinds.
pub fn qlearn_step<S: Scalar>(
    table: &mut QTable<S>,
    state: S,
    arm: usize,
    reward: Reward,
    next: NextState<S>,
    spec: &PolicySpec<S>,
) -> Result<()> {
    if !spec.kind.is_q_learning() {
        return Err(Error::Policy(format!("{} does not use a Q-table", spec.kind)));
    }
    if arm >= table.num_arms() {
        return Err(Error::ArmOutOfRange {
            arm,
            arms: table.num_arms(),
        });
    }
    let s = binary_index(state)?;
    let next = match next {
        NextState::Live(x) => Some(binary_index(x)?),
        NextState::Terminal => None,
    };
    let horizon = match (spec.kind, spec.horizon) {
        (PolicyKind::QUcb, None) => return Err(Error::Policy("Q-UCB needs H; resolve the spec first".into())),
        (_, h) => h.unwrap_or(S::one()),
    };
    table.update(s, arm, reward, next, spec.kind, horizon);
    Ok(())
}
