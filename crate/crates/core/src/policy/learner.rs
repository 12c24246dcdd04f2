use rand::Rng;

use super::index::{kl_slope, kl_value, kl_value_bounds, ulcb_value};
use super::{argmax, index_rule, AgentState, PolicyKind, PolicySpec, QTable, Rule};
use crate::error::Result;
use crate::kl::{self, Side};
use crate::model::{BanditInstance, NextState, Reward};
use crate::scalar::Scalar;

/// KL index computed for one arm and side.
#[derive(Debug, Clone, Copy)]
struct Slot<S> {
    /// Pull count the value was computed at; `u64::MAX` when empty.
    n: u64,
    threshold: S,
    value: S,
    slope: S,
}

impl<S: Scalar> Slot<S> {
    fn empty() -> Self {
        Self {
            n: u64::MAX,
            threshold: S::zero(),
            value: S::zero(),
            slope: S::infinity(),
        }
    }
}

/// Stateful learner that plays a [`PolicySpec`] over many episodes.
///
/// Chooses exactly the arms [`super::select_action`] would for the same
/// history. KL kinds avoid most index inversions: each arm's index is first
/// enclosed in an interval (closed-form KL bounds, or a cached value plus a
/// slope bound while the arm's statistics are unchanged) and only the
/// intervals that could change the argmax are resolved.
#[derive(Debug, Clone)]
pub struct Learner<S> {
    spec: PolicySpec<S>,
    agent: AgentState,
    qtable: Option<QTable<S>>,
    q_init: S,
    slots: Vec<[Slot<S>; 2]>,
    lo: Vec<S>,
    hi: Vec<S>,
    exact: Vec<bool>,
}

impl<S: Scalar> Learner<S> {
    /// Checks `spec` against `instance` and builds a fresh learner.
    pub fn new(spec: PolicySpec<S>, instance: &BanditInstance<S>) -> Result<Self> {
        let spec = spec.resolve(instance)?;
        let arms = instance.num_arms();
        // Q-UCB starts optimistic at H; Q-EPS at zero
        let q_init = match spec.kind {
            PolicyKind::QUcb => spec.horizon.unwrap_or(S::zero()),
            _ => S::zero(),
        };
        let qtable = spec.kind.is_q_learning().then(|| QTable::new(arms, q_init));
        Ok(Self {
            spec,
            agent: AgentState::new(arms),
            qtable,
            q_init,
            slots: vec![[Slot::empty(); 2]; arms],
            lo: vec![S::zero(); arms],
            hi: vec![S::zero(); arms],
            exact: vec![false; arms],
        })
    }

    /// Forgets everything learned.
    pub fn reset(&mut self) {
        self.agent.reset();
        if let Some(q) = &mut self.qtable {
            q.reset(self.q_init);
        }
        for s in &mut self.slots {
            *s = [Slot::empty(); 2];
        }
    }

    pub fn spec(&self) -> &PolicySpec<S> {
        &self.spec
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    pub fn qtable(&self) -> Option<&QTable<S>> {
        self.qtable.as_ref()
    }

    /// Arm to play in `state`, a live state of the instance the learner was built for.
    #[inline]
    pub fn select<R: Rng + ?Sized>(&mut self, state: S, rng: &mut R) -> Result<usize> {
        match self.spec.kind {
            PolicyKind::Genie => return Ok(0),
            _ => {
                if let Some(arm) = self.agent.first_unpulled() {
                    return Ok(arm);
                }
            }
        }
        match self.spec.kind {
            PolicyKind::QEps => {
                let table = self.qtable.as_ref().expect("Q-EPS learner has a table");
                Ok(table.epsilon_greedy(usize::from(state == S::one()), self.spec.epsilon, rng))
            }
            PolicyKind::QUcb => {
                let table = self.qtable.as_ref().expect("Q-UCB learner has a table");
                let horizon = self.spec.horizon.unwrap_or(S::one());
                Ok(table.ucb_choice(
                    usize::from(state == S::one()),
                    self.spec.bonus_c,
                    horizon,
                    self.agent.t(),
                ))
            }
            _ => {
                let ln_t = S::from_count(self.agent.t()).ln();
                Ok(match index_rule(&self.spec, state, ln_t)? {
                    Rule::Linear { coeff, radicand } => {
                        let agent = &self.agent;
                        argmax((0..agent.num_arms()).map(|a| {
                            ulcb_value(agent.mean::<S>(a).unwrap_or_default(), agent.count(a), coeff, radicand)
                        }))
                    }
                    Rule::Kl { side, threshold } => self.lazy_kl_argmax(side, threshold),
                })
            }
        }
    }

    /// Records the outcome of pulling `arm` in `state`.
    #[inline]
    pub fn observe(&mut self, state: S, arm: usize, reward: Reward, next: NextState<S>) {
        self.agent.record(arm, reward);
        if let Some(table) = &mut self.qtable {
            let next = match next {
                NextState::Live(x) => Some(usize::from(x == S::one())),
                NextState::Terminal => None,
            };
            let horizon = self.spec.horizon.unwrap_or(S::one());
            table.update(
                usize::from(state == S::one()),
                arm,
                reward,
                next,
                self.spec.kind,
                horizon,
            );
        }
    }

    fn lazy_kl_argmax(&mut self, side: Side, threshold: S) -> usize {
        let m = self.agent.num_arms();
        let slack = S::lit(2.0) * kl::tolerance::<S>();
        let si = side as usize;
        for a in 0..m {
            let n = self.agent.count(a);
            let slot = &self.slots[a][si];
            let (lo, hi, exact) = if slot.n == n && threshold >= slot.threshold && slot.slope.is_finite() {
                if threshold == slot.threshold {
                    (slot.value, slot.value, true)
                } else {
                    let drift = slot.slope * (threshold - slot.threshold);
                    match side {
                        Side::Upper => (slot.value - slack, slot.value + slack + drift, false),
                        Side::Lower => (slot.value - slack - drift, slot.value + slack, false),
                    }
                }
            } else {
                let mean = self.agent.mean::<S>(a).unwrap_or_default();
                kl_value_bounds(mean, n, threshold, side)
            };
            self.lo[a] = lo;
            self.hi[a] = hi;
            self.exact[a] = exact;
        }
        loop {
            let a = argmax(self.hi.iter().copied());
            if self.exact[a] {
                return a;
            }
            let lo = self.lo[a];
            let separated = (0..m).all(|b| b == a || (b < a && self.hi[b] < lo) || (b > a && self.hi[b] <= lo));
            if separated {
                return a;
            }
            let n = self.agent.count(a);
            let mean = self.agent.mean::<S>(a).unwrap_or_default();
            let value = kl_value(mean, n, threshold, side);
            self.slots[a][si] = Slot {
                n,
                threshold,
                value,
                slope: kl_slope(mean, n, value),
            };
            self.lo[a] = value;
            self.hi[a] = value;
            self.exact[a] = true;
        }
    }
}
