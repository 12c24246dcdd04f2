//! Action-selection rules: state-dependent confidence-bound policies, their
//! state-blind baselines and tabular Q-learning baselines.

mod agent;
mod index;
mod learner;
mod qlearn;
mod select;

use std::fmt;
use std::str::FromStr;

pub use agent::AgentState;
pub use index::{log_threshold, ulcb_index};
pub use learner::Learner;
pub use qlearn::{qlearn_step, QTable};
pub use select::select_action;

use crate::error::{Error, Result};
use crate::kl::Side;
pub use crate::kl::{kl_index_lower, kl_index_upper};
use crate::model::{binary_index, BanditInstance};
use crate::scalar::Scalar;
use crate::solver::{expected_episode_length, GapOrientation};

/// Which state receives the optimistic index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Optimistic in state 1, pessimistic in state 0.
    #[default]
    Standard,
    /// Optimistic in state 0, pessimistic in state 1.
    Opposite,
}

impl From<GapOrientation> for Orientation {
    fn from(o: GapOrientation) -> Self {
        match o {
            GapOrientation::Opposite => Orientation::Opposite,
            GapOrientation::Standard | GapOrientation::Degenerate => Orientation::Standard,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Standard => "standard",
            Orientation::Opposite => "opposite",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Orientation::Standard),
            "opposite" => Ok(Orientation::Opposite),
            _ => Err(Error::Policy(format!("unknown orientation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Ulcb,
    KlUlcb,
    Ucb,
    KlUcb,
    DiscUlcb,
    DiscKlUlcb,
    ContUlcb,
    ContKlUlcb,
    QEps,
    QUcb,
    /// Always pulls the best arm; knows the model.
    Genie,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 11] = [
        PolicyKind::Ulcb,
        PolicyKind::KlUlcb,
        PolicyKind::Ucb,
        PolicyKind::KlUcb,
        PolicyKind::DiscUlcb,
        PolicyKind::DiscKlUlcb,
        PolicyKind::ContUlcb,
        PolicyKind::ContKlUlcb,
        PolicyKind::QEps,
        PolicyKind::QUcb,
        PolicyKind::Genie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ulcb => "ULCB",
            PolicyKind::KlUlcb => "KL-ULCB",
            PolicyKind::Ucb => "UCB",
            PolicyKind::KlUcb => "KL-UCB",
            PolicyKind::DiscUlcb => "DISC-ULCB",
            PolicyKind::DiscKlUlcb => "DISC-KL-ULCB",
            PolicyKind::ContUlcb => "CONT-ULCB",
            PolicyKind::ContKlUlcb => "CONT-KL-ULCB",
            PolicyKind::QEps => "Q-EPS",
            PolicyKind::QUcb => "Q-UCB",
            PolicyKind::Genie => "GENIE",
        }
    }

    pub fn is_q_learning(self) -> bool {
        matches!(self, PolicyKind::QEps | PolicyKind::QUcb)
    }

    /// Kinds whose state argument must be exactly `0` or `1`.
    pub fn needs_binary_states(self) -> bool {
        matches!(
            self,
            PolicyKind::Ulcb | PolicyKind::KlUlcb | PolicyKind::QEps | PolicyKind::QUcb
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Policy(format!("unknown policy kind {s:?}")))
    }
}

/// Policy kind plus every hyperparameter any kind can use.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec<S> {
    pub kind: PolicyKind,
    /// Index coefficient in state 0.
    pub c0: S,
    /// Index coefficient in state 1, and the only one state-blind kinds use.
    pub c1: S,
    /// Weight of the `ln ln t` term; `0` drops it.
    pub c: S,
    pub orientation: Orientation,
    /// Bins for the discretized kinds.
    pub n_bins: usize,
    /// Exploration probability of Q-EPS.
    pub epsilon: S,
    /// Episode-length parameter `H` of Q-UCB; `None` means the model's maximum
    /// expected episode length.
    pub horizon: Option<S>,
    /// Bonus constant of Q-UCB.
    pub bonus_c: S,
}

impl<S: Scalar> PolicySpec<S> {
    /// Spec with the kind's default hyperparameters and standard orientation.
    pub fn new(kind: PolicyKind) -> Self {
        let (c0, c1) = default_coefficients(kind, Orientation::Standard);
        Self {
            kind,
            c0,
            c1,
            c: S::zero(),
            orientation: Orientation::Standard,
            n_bins: 4,
            epsilon: S::lit(0.1),
            horizon: None,
            bonus_c: S::lit(4.0),
        }
    }

    pub fn ulcb() -> Self {
        Self::new(PolicyKind::Ulcb)
    }

    pub fn kl_ulcb() -> Self {
        Self::new(PolicyKind::KlUlcb)
    }

    pub fn ucb() -> Self {
        Self::new(PolicyKind::Ucb)
    }

    pub fn kl_ucb() -> Self {
        Self::new(PolicyKind::KlUcb)
    }

    pub fn disc_ulcb(n_bins: usize) -> Self {
        Self {
            n_bins,
            ..Self::new(PolicyKind::DiscUlcb)
        }
    }

    pub fn disc_kl_ulcb(n_bins: usize) -> Self {
        Self {
            n_bins,
            ..Self::new(PolicyKind::DiscKlUlcb)
        }
    }

    pub fn cont_ulcb() -> Self {
        Self::new(PolicyKind::ContUlcb)
    }

    pub fn cont_kl_ulcb() -> Self {
        Self::new(PolicyKind::ContKlUlcb)
    }

    pub fn q_eps() -> Self {
        Self::new(PolicyKind::QEps)
    }

    pub fn q_ucb() -> Self {
        Self::new(PolicyKind::QUcb)
    }

    pub fn genie() -> Self {
        Self::new(PolicyKind::Genie)
    }

    /// Sets the orientation and resets `c0`, `c1` to that orientation's defaults.
    pub fn oriented(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        (self.c0, self.c1) = default_coefficients(self.kind, orientation);
        self
    }

    pub fn with_coefficients(mut self, c0: S, c1: S) -> Self {
        self.c0 = c0;
        self.c1 = c1;
        self
    }

    pub fn with_log_log(mut self, c: S) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c0, self.c1, self.c, self.epsilon, self.bonus_c];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Policy("hyperparameters must be finite".into()));
        }
        if self.c < S::zero() {
            return Err(Error::Policy(format!(
                "log-log weight c = {} must be non-negative",
                self.c
            )));
        }
        if matches!(self.kind, PolicyKind::DiscUlcb | PolicyKind::DiscKlUlcb) && self.n_bins < 2 {
            return Err(Error::Policy(format!("n_bins = {} must be at least 2", self.n_bins)));
        }
        if !(self.epsilon >= S::zero() && self.epsilon <= S::one()) {
            return Err(Error::Policy(format!("epsilon = {} not in [0, 1]", self.epsilon)));
        }
        if self.bonus_c < S::zero() {
            return Err(Error::Policy(format!(
                "bonus_c = {} must be non-negative",
                self.bonus_c
            )));
        }
        if let Some(h) = self.horizon {
            if !(h > S::zero() && h.is_finite()) {
                return Err(Error::Policy(format!("H = {h} must be positive")));
            }
        }
        Ok(())
    }

    /// Checks the spec against `instance` and fills in a missing Q-UCB `H`.
    pub fn resolve(mut self, instance: &BanditInstance<S>) -> Result<Self> {
        self.validate()?;
        if self.kind.needs_binary_states() && !instance.is_binary() {
            return Err(Error::Policy(format!("{} needs the binary state model", self.kind)));
        }
        if self.kind == PolicyKind::QUcb && self.horizon.is_none() {
            let len = expected_episode_length(instance)?;
            self.horizon = Some(len[0].max(len[1]));
        }
        Ok(self)
    }
}

/// `(c0, c1)` defaults: `(−1, 1)` for ULCB-type kinds in the standard
/// orientation, `(1, −1)` in the opposite one, `(1, 1)` otherwise.
pub fn default_coefficients<S: Scalar>(kind: PolicyKind, orientation: Orientation) -> (S, S) {
    let one = S::one();
    match (kind, orientation) {
        (PolicyKind::Ulcb | PolicyKind::DiscUlcb, Orientation::Standard) => (-one, one),
        (PolicyKind::Ulcb | PolicyKind::DiscUlcb, Orientation::Opposite) => (one, -one),
        _ => (one, one),
    }
}

/// `1` iff `s` falls in the top bin `[(n−1)/n, 1]`.
#[inline]
pub fn disc_state_map<S: Scalar>(s: S, n_bins: usize) -> usize {
    let n = n_bins as u64;
    usize::from(s >= S::from_count(n - 1) / S::from_count(n))
}

/// Per-step index used by an index policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Rule<S> {
    /// `μ̄ + coeff·√(radicand / 2N)`.
    Linear { coeff: S, radicand: S },
    /// KL confidence index on `side` with the given threshold.
    Kl { side: Side, threshold: S },
}

fn kl_side(orientation: Orientation, optimistic: bool) -> Side {
    match (orientation, optimistic) {
        (Orientation::Standard, true) | (Orientation::Opposite, false) => Side::Upper,
        _ => Side::Lower,
    }
}

/// Index rule of an index-policy `spec` in `state` at `ln t`.
#[inline]
pub(crate) fn index_rule<S: Scalar>(spec: &PolicySpec<S>, state: S, ln_t: S) -> Result<Rule<S>> {
    let one = S::one();
    let two = S::lit(2.0);
    let binary_rule = |b: usize| -> Rule<S> {
        let coeff = if b == 1 { spec.c1 } else { spec.c0 };
        match spec.kind {
            PolicyKind::Ulcb | PolicyKind::DiscUlcb => Rule::Linear {
                coeff,
                radicand: log_threshold(one, spec.c, ln_t),
            },
            _ => Rule::Kl {
                side: kl_side(spec.orientation, b == 1),
                threshold: log_threshold(coeff, spec.c, ln_t),
            },
        }
    };
    Ok(match spec.kind {
        PolicyKind::Ucb => Rule::Linear {
            coeff: spec.c1,
            radicand: log_threshold(one, spec.c, ln_t),
        },
        PolicyKind::KlUcb => Rule::Kl {
            side: Side::Upper,
            threshold: log_threshold(spec.c1, spec.c, ln_t),
        },
        PolicyKind::Ulcb | PolicyKind::KlUlcb => binary_rule(binary_index(state)?),
        PolicyKind::DiscUlcb | PolicyKind::DiscKlUlcb => binary_rule(disc_state_map(state, spec.n_bins)),
        PolicyKind::ContUlcb => {
            let slope = two * state - one;
            let coeff = match spec.orientation {
                Orientation::Standard => slope,
                Orientation::Opposite => -slope,
            };
            Rule::Linear {
                coeff,
                radicand: log_threshold(one, spec.c, ln_t),
            }
        }
        PolicyKind::ContKlUlcb => {
            let upper_half = state > S::lit(0.5);
            let weight = if upper_half {
                two * state - one
            } else {
                one - two * state
            };
            Rule::Kl {
                side: kl_side(spec.orientation, upper_half),
                threshold: log_threshold(weight, spec.c, ln_t),
            }
        }
        PolicyKind::QEps | PolicyKind::QUcb | PolicyKind::Genie => {
            return Err(Error::Policy(format!("{} is not an index policy", spec.kind)))
        }
    })
}

/// Lowest index attaining the maximum.
#[inline]
pub(crate) fn argmax<S: Scalar>(values: impl Iterator<Item = S>) -> usize {
    let mut best = 0;
    let mut best_value = S::neg_infinity();
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disc_map_boundaries() {
        assert_eq!(disc_state_map(0.75, 4), 1);
        assert_eq!(disc_state_map(0.7499, 4), 0);
        assert_eq!(disc_state_map(0.5, 2), 1);
        assert_eq!(disc_state_map(0.0, 2), 0);
        assert_eq!(disc_state_map(1.0, 2), 1);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("kl_ulcb".parse::<PolicyKind>().unwrap(), PolicyKind::KlUlcb);
        assert!("thompson".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn defaults() {
        let s = PolicySpec::<f64>::ulcb();
        assert_eq!((s.c0, s.c1, s.c), (-1.0, 1.0, 0.0));
        let s = PolicySpec::<f64>::ulcb().oriented(Orientation::Opposite);
        assert_eq!((s.c0, s.c1), (1.0, -1.0));
        let s = PolicySpec::<f64>::kl_ulcb().oriented(Orientation::Opposite);
        assert_eq!((s.c0, s.c1), (1.0, 1.0));
        assert_eq!(PolicySpec::<f64>::q_eps().epsilon, 0.1);
        assert_eq!(PolicySpec::<f64>::q_ucb().bonus_c, 4.0);
        assert!(PolicySpec::<f64>::disc_ulcb(1).validate().is_err());
        assert!(PolicySpec::<f64>::ulcb().with_log_log(-1.0).validate().is_err());
    }

    #[test]
    fn rules_follow_state() {
        let l = 10f64.ln();
        let s = PolicySpec::<f64>::kl_ulcb();
        assert!(matches!(
            index_rule(&s, 1.0, l).unwrap(),
            Rule::Kl { side: Side::Upper, .. }
        ));
        assert!(matches!(
            index_rule(&s, 0.0, l).unwrap(),
            Rule::Kl { side: Side::Lower, .. }
        ));
        assert!(index_rule(&s, 0.5, l).is_err());
        let s = s.oriented(Orientation::Opposite);
        assert!(matches!(
            index_rule(&s, 1.0, l).unwrap(),
            Rule::Kl { side: Side::Lower, .. }
        ));
        let s = PolicySpec::<f64>::cont_kl_ulcb();
        assert_eq!(
            index_rule(&s, 0.5, l).unwrap(),
            Rule::Kl {
                side: Side::Lower,
                threshold: 0.0
            }
        );
        match index_rule(&s, 0.75, l).unwrap() {
            Rule::Kl {
                side: Side::Upper,
                threshold,
            } => assert_eq!(threshold, 0.5 * l),
            r => panic!("{r:?}"),
        }
        let s = PolicySpec::<f64>::cont_ulcb();
        assert_eq!(
            index_rule(&s, 0.5, l).unwrap(),
            Rule::Linear {
                coeff: 0.0,
                radicand: l
            }
        );
    }
}
