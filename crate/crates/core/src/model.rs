//! Ground-truth dynamics of the bandit-with-abandonment environment.
//!
//! Two state models are supported. In the binary model the state is the
//! previous reward (`0` or `1`) and abandonment depends on the pair
//! (state, reward). In the general model the state is an exponential moving
//! average of past rewards in `[0, 1]` and abandonment depends on the state
//! reached after the update.
//!
//! Arms are always stored sorted by non-increasing mean; index `0` is the best
//! arm. [`ArmSet::user_index`] maps back to the order the caller supplied.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bernoulli reward, `0` or `1`.
pub type Reward = u8;

/// Bernoulli arms sorted by non-increasing mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet<S> {
    means: Vec<S>,
    order: Vec<usize>,
}

impl<S: Scalar> ArmSet<S> {
    /// Builds an arm set from means given in any order. Requires at least two
    /// arms and every mean in `[0, 1]`.
    pub fn new(means: &[S]) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::Invalid(format!(
                "at least two arms are required, got {}",
                means.len()
            )));
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() || m < S::zero() || m > S::one() {
                return Err(Error::Invalid(format!("arm {i} mean {m} is not in [0, 1]")));
            }
        }
        let mut order: Vec<usize> = (0..means.len()).collect();
        // stable: equal means keep the caller's relative order
        order.sort_by(|&a, &b| means[b].partial_cmp(&means[a]).expect("finite means"));
        let sorted = order.iter().map(|&i| means[i]).collect();
        Ok(Self { means: sorted, order })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// Sorted means, best first.
    pub fn means(&self) -> &[S] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> Result<S> {
        self.means
            .get(arm)
            .copied()
            .ok_or(Error::ArmOutOfRange { arm, arms: self.len() })
    }

    pub fn best(&self) -> S {
        self.means[0]
    }

    /// Position in the caller's original ordering of sorted arm `arm`.
    pub fn user_index(&self, arm: usize) -> usize {
        self.order[arm]
    }

    /// Sorted position of the arm the caller supplied at position `user`.
    pub fn sorted_index(&self, user: usize) -> Option<usize> {
        self.order.iter().position(|&u| u == user)
    }

    /// Mean gap `μ(a_1) − μ(a_i)`.
    pub fn gap(&self, arm: usize) -> S {
        self.means[0] - self.means[arm]
    }

    /// True when the two best arms tie, which leaves the regret constants undefined.
    pub fn is_degenerate(&self) -> bool {
        self.means[0] == self.means[1]
    }

    /// Arms in the caller's original order.
    pub fn user_means(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.len()];
        for (sorted, &user) in self.order.iter().enumerate() {
            out[user] = self.means[sorted];
        }
        out
    }
}

/// Abandonment probabilities `q(state, reward)` of the binary model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryAbandonment<S> {
    pub q00: S,
    pub q01: S,
    pub q10: S,
    pub q11: S,
}

impl<S: Scalar> BinaryAbandonment<S> {
    /// Validates probabilities, monotonicity (`q(i,j) ≥ q(i',j')` whenever
    /// `i + j < i' + j'`) and `q(0,0) > 0`.
    pub fn new(q00: S, q01: S, q10: S, q11: S) -> Result<Self> {
        for (name, q) in [("q00", q00), ("q01", q01), ("q10", q10), ("q11", q11)] {
            if !q.is_finite() || q < S::zero() || q > S::one() {
                return Err(Error::Invalid(format!("{name} = {q} is not a probability")));
            }
        }
        let ordered = [
            ("q(0,0) >= q(0,1)", q00 >= q01),
            ("q(0,0) >= q(1,0)", q00 >= q10),
            ("q(0,0) >= q(1,1)", q00 >= q11),
            ("q(0,1) >= q(1,1)", q01 >= q11),
            ("q(1,0) >= q(1,1)", q10 >= q11),
        ];
        for (rule, ok) in ordered {
            if !ok {
                return Err(Error::Assumption(format!(
                    "abandonment must not increase with a better experience: {rule}"
                )));
            }
        }
        if q00 <= S::zero() {
            return Err(Error::Assumption("q(0,0) > 0 is required".into()));
        }
        Ok(Self { q00, q01, q10, q11 })
    }

    /// `q(state, reward)` for `state, reward ∈ {0, 1}`.
    #[inline]
    pub fn q(&self, state: usize, reward: Reward) -> S {
        match (state, reward) {
            (0, 0) => self.q00,
            (0, _) => self.q01,
            (_, 0) => self.q10,
            _ => self.q11,
        }
    }
}

/// Non-increasing abandonment curve `q: [0,1] → [0,1]` of the general model.
#[derive(Debug, Clone, PartialEq)]
pub enum AbandonmentCurve<S> {
    /// `q(s) = 1 − ln(c6·s + 1) / ln(c6 + 1)`.
    Log { c6: S },
    /// Piecewise-linear interpolation through `(s, q)` knots, flat outside the knots.
    Table { points: Vec<(S, S)> },
}

impl<S: Scalar> AbandonmentCurve<S> {
    pub fn log(c6: S) -> Result<Self> {
        if !c6.is_finite() || c6 <= S::zero() {
            return Err(Error::Invalid(format!("log curve constant c6 = {c6} must be positive")));
        }
        Ok(Self::Log { c6 })
    }

    /// Rejects knots that are unsorted, outside `[0,1]`, increasing in `q`, or
    /// that reach zero abandonment before `s = 1`.
    pub fn table(points: Vec<(S, S)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("abandonment table needs at least two points".into()));
        }
        for &(s, q) in &points {
            let unit = |x: S| x.is_finite() && x >= S::zero() && x <= S::one();
            if !unit(s) || !unit(q) {
                return Err(Error::Invalid(format!("table point ({s}, {q}) outside [0,1]^2")));
            }
            if s < S::one() && q <= S::zero() {
                return Err(Error::Assumption(format!(
                    "abandonment must be positive below s = 1, got q({s}) = 0"
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Invalid("table states must be strictly increasing".into()));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Assumption(format!(
                    "abandonment curve must be non-increasing: q({}) = {} > q({}) = {}",
                    w[1].0, w[1].1, w[0].0, w[0].1
                )));
            }
        }
        Ok(Self::Table { points })
    }

    #[inline]
    pub fn eval(&self, s: S) -> S {
        match self {
            Self::Log { c6 } => {
                let q = S::one() - (*c6 * s).ln_1p() / c6.ln_1p();
                q.max(S::zero()).min(S::one())
            }
            Self::Table { points } => interpolate(points, s),
        }
    }
}

fn interpolate<S: Scalar>(points: &[(S, S)], s: S) -> S {
    let first = points[0];
    let last = points[points.len() - 1];
    if s <= first.0 {
        return first.1;
    }
    if s >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|p| p.0 <= s);
    let (s0, q0) = points[i - 1];
    let (s1, q1) = points[i];
    q0 + (q1 - q0) * (s - s0) / (s1 - s0)
}

/// Abandonment curve plus forgetting factor `θ` of the general model.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralAbandonment<S> {
    pub curve: AbandonmentCurve<S>,
    pub theta: S,
}

impl<S: Scalar> GeneralAbandonment<S> {
    pub fn new(curve: AbandonmentCurve<S>, theta: S) -> Result<Self> {
        if !(theta > S::zero() && theta < S::one()) {
            return Err(Error::Invalid(format!("forgetting factor θ = {theta} not in (0,1)")));
        }
        Ok(Self { curve, theta })
    }

    #[inline]
    pub fn q(&self, s: S) -> S {
        self.curve.eval(s)
    }

    /// Successor state `(1−θ)s + θ·reward` before abandonment is sampled.
    #[inline]
    pub fn advance(&self, s: S, reward: Reward) -> S {
        let next = (S::one() - self.theta) * s + if reward == 1 { self.theta } else { S::zero() };
        next.min(S::one())
    }

    /// Checks `q` is non-increasing on a uniform grid of `points` states.
    pub fn is_monotone_on_grid(&self, points: usize) -> bool {
        let n = points.max(2);
        let mut prev = self.q(S::zero());
        (1..n).all(|i| {
            let q = self.q(S::from_count(i as u64) / S::from_count(n as u64 - 1));
            let ok = q <= prev;
            prev = q;
            ok
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Abandonment<S> {
    Binary(BinaryAbandonment<S>),
    General(GeneralAbandonment<S>),
}

/// Discrete distribution of the first state of every episode.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState<S> {
    atoms: Vec<(S, S)>,
}

impl<S: Scalar> InitialState<S> {
    pub fn point(state: S) -> Self {
        Self {
            atoms: vec![(state, S::one())],
        }
    }

    /// `(state, probability)` atoms; probabilities must sum to one.
    pub fn discrete(atoms: Vec<(S, S)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("initial-state distribution is empty".into()));
        }
        let mut total = S::zero();
        for &(_, p) in &atoms {
            if !(p >= S::zero()) {
                return Err(Error::Invalid(format!("negative initial-state probability {p}")));
            }
            total += p;
        }
        if (total - S::one()).abs() > S::lit(1e-9) {
            return Err(Error::Invalid(format!("initial-state probabilities sum to {total}")));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(S, S)] {
        &self.atoms
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let u = S::uniform(rng);
        let mut acc = S::zero();
        for &(s, p) in &self.atoms {
            acc += p;
            if u < acc {
                return s;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

impl<S: Scalar> Default for InitialState<S> {
    fn default() -> Self {
        Self::point(S::one())
    }
}

/// State reached after one pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NextState<S> {
    Live(S),
    /// The user abandoned; the episode is over.
    Terminal,
}

impl<S> NextState<S> {
    pub fn is_terminal(&self) -> bool {
        matches!(self, NextState::Terminal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<S> {
    pub reward: Reward,
    pub next: NextState<S>,
}

/// One row of the transition kernel: the low successor (after reward 0), the
/// high successor (after reward 1) and abandonment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRow<S> {
    pub low_state: S,
    pub low: S,
    pub high_state: S,
    pub high: S,
    pub terminal: S,
}

/// Full ground-truth environment. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance<S> {
    arms: ArmSet<S>,
    abandonment: Abandonment<S>,
    initial: InitialState<S>,
}

impl<S: Scalar> BanditInstance<S> {
    /// Builds an instance starting every episode in state `1`. The best mean must be `< 1`.
    pub fn new(arms: ArmSet<S>, abandonment: Abandonment<S>) -> Result<Self> {
        if arms.best() >= S::one() {
            return Err(Error::Assumption(format!(
                "best arm mean must be below 1, got {}",
                arms.best()
            )));
        }
        let inst = Self {
            arms,
            abandonment,
            initial: InitialState::default(),
        };
        if inst.arms.is_degenerate() {
            log::warn!("best two arms tie; regret constants are undefined for this instance");
        }
        Ok(inst)
    }

    pub fn binary(means: &[S], q: BinaryAbandonment<S>) -> Result<Self> {
        Self::new(ArmSet::new(means)?, Abandonment::Binary(q))
    }

    pub fn general(means: &[S], g: GeneralAbandonment<S>) -> Result<Self> {
        Self::new(ArmSet::new(means)?, Abandonment::General(g))
    }

    pub fn with_initial_state(mut self, initial: InitialState<S>) -> Result<Self> {
        for &(s, _) in initial.atoms() {
            self.check_state(s)?;
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn arms(&self) -> &ArmSet<S> {
        &self.arms
    }

    pub fn abandonment(&self) -> &Abandonment<S> {
        &self.abandonment
    }

    pub fn initial_state(&self) -> &InitialState<S> {
        &self.initial
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.abandonment, Abandonment::Binary(_))
    }

    pub fn binary_abandonment(&self) -> Result<&BinaryAbandonment<S>> {
        match &self.abandonment {
            Abandonment::Binary(q) => Ok(q),
            Abandonment::General(_) => Err(Error::WrongModel { expected: "binary" }),
        }
    }

    pub fn general_abandonment(&self) -> Result<&GeneralAbandonment<S>> {
        match &self.abandonment {
            Abandonment::General(g) => Ok(g),
            Abandonment::Binary(_) => Err(Error::WrongModel { expected: "general" }),
        }
    }

    /// Validates a live state for this model.
    pub fn check_state(&self, s: S) -> Result<()> {
        let ok = match self.abandonment {
            Abandonment::Binary(_) => s == S::zero() || s == S::one(),
            Abandonment::General(_) => s >= S::zero() && s <= S::one(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidState(s.as_f64()))
        }
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm < self.num_arms() {
            Ok(())
        } else {
            Err(Error::ArmOutOfRange {
                arm,
                arms: self.num_arms(),
            })
        }
    }

    /// One pull in the binary model.
    pub fn binary_step<R: Rng + ?Sized>(&self, state: S, arm: usize, rng: &mut R) -> Result<StepOutcome<S>> {
        let q = self.binary_abandonment()?;
        self.check_arm(arm)?;
        let s = binary_index(state)?;
        Ok(binary_step_unchecked(q, self.arms.means[arm], s, rng))
    }

    /// One pull in the general model.
    pub fn general_step<R: Rng + ?Sized>(&self, state: S, arm: usize, rng: &mut R) -> Result<StepOutcome<S>> {
        let g = self.general_abandonment()?;
        self.check_arm(arm)?;
        if !(state >= S::zero() && state <= S::one()) {
            return Err(Error::InvalidState(state.as_f64()));
        }
        Ok(general_step_unchecked(g, self.arms.means[arm], state, rng))
    }

    /// One pull in whichever model the instance uses.
    pub fn step<R: Rng + ?Sized>(&self, state: S, arm: usize, rng: &mut R) -> Result<StepOutcome<S>> {
        match self.abandonment {
            Abandonment::Binary(_) => self.binary_step(state, arm, rng),
            Abandonment::General(_) => self.general_step(state, arm, rng),
        }
    }

    /// Hot-path step without validation; `arm` and `state` must be valid.
    #[inline]
    pub(crate) fn step_unchecked<R: Rng + ?Sized>(&self, state: S, arm: usize, rng: &mut R) -> StepOutcome<S> {
        let mu = self.arms.means[arm];
        match &self.abandonment {
            Abandonment::Binary(q) => binary_step_unchecked(q, mu, usize::from(state == S::one()), rng),
            Abandonment::General(g) => general_step_unchecked(g, mu, state, rng),
        }
    }

    /// Exact transition probabilities from `state` when pulling `arm`.
    pub fn transition_probs(&self, state: S, arm: usize) -> Result<TransitionRow<S>> {
        self.check_arm(arm)?;
        self.check_state(state)?;
        let mu = self.arms.means[arm];
        let one = S::one();
        Ok(match &self.abandonment {
            Abandonment::Binary(q) => {
                let s = binary_index(state)?;
                let (q0, q1) = (q.q(s, 0), q.q(s, 1));
                TransitionRow {
                    low_state: S::zero(),
                    low: (one - mu) * (one - q0),
                    high_state: one,
                    high: mu * (one - q1),
                    terminal: (one - mu) * q0 + mu * q1,
                }
            }
            Abandonment::General(g) => {
                let (lo, hi) = (g.advance(state, 0), g.advance(state, 1));
                let (q0, q1) = (g.q(lo), g.q(hi));
                TransitionRow {
                    low_state: lo,
                    low: (one - mu) * (one - q0),
                    high_state: hi,
                    high: mu * (one - q1),
                    terminal: (one - mu) * q0 + mu * q1,
                }
            }
        })
    }
}

/// Maps a binary state value to `0` or `1`.
pub fn binary_index<S: Scalar>(s: S) -> Result<usize> {
    if s == S::zero() {
        Ok(0)
    } else if s == S::one() {
        Ok(1)
    } else {
        Err(Error::InvalidState(s.as_f64()))
    }
}

#[inline]
fn bernoulli<S: Scalar, R: Rng + ?Sized>(p: S, rng: &mut R) -> bool {
    if p <= S::zero() {
        return false;
    }
    if p >= S::one() {
        return true;
    }
    S::uniform(rng) < p
}

/// Draws a Bernoulli reward for `arm` (sorted index).
pub fn sample_reward<S: Scalar, R: Rng + ?Sized>(arms: &ArmSet<S>, arm: usize, rng: &mut R) -> Result<Reward> {
    let mu = arms.mean(arm)?;
    Ok(Reward::from(bernoulli(mu, rng)))
}

#[inline]
fn binary_step_unchecked<S: Scalar, R: Rng + ?Sized>(
    q: &BinaryAbandonment<S>,
    mu: S,
    state: usize,
    rng: &mut R,
) -> StepOutcome<S> {
    let reward = Reward::from(bernoulli(mu, rng));
    let next = if bernoulli(q.q(state, reward), rng) {
        NextState::Terminal
    } else {
        NextState::Live(if reward == 1 { S::one() } else { S::zero() })
    };
    StepOutcome { reward, next }
}

#[inline]
fn general_step_unchecked<S: Scalar, R: Rng + ?Sized>(
    g: &GeneralAbandonment<S>,
    mu: S,
    state: S,
    rng: &mut R,
) -> StepOutcome<S> {
    let reward = Reward::from(bernoulli(mu, rng));
    let candidate = g.advance(state, reward);
    let next = if bernoulli(g.q(candidate), rng) {
        NextState::Terminal
    } else {
        NextState::Live(candidate)
    };
    StepOutcome { reward, next }
}
