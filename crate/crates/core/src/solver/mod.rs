//! Exact model-based computations: optimal values, gaps, orientation checks
//! and the asymptotic regret constants.

mod binary;
mod bounds;
mod general;

pub use binary::{
    evaluate_stationary_policy, expected_episode_length, solve_binary_values, verify_optimal_policy, BinaryValues,
    ENUMERATION_MAX_ARMS,
};
pub use bounds::{bound_constants, BoundConstants, DiscBounds};
pub use general::{check_gap_monotonicity, solve_general_values, GeneralValues, GridOptions, MIN_GRID_SIZE};

use crate::error::Result;
use crate::model::{binary_index, Abandonment, BanditInstance, BinaryAbandonment};
use crate::scalar::Scalar;

/// Optimal value function of either state model.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueSolution<S> {
    Binary(BinaryValues<S>),
    General(GeneralValues<S>),
}

impl<S: Scalar> ValueSolution<S> {
    /// Solves whichever model `instance` uses; `grid` only matters for the general model.
    pub fn solve(instance: &BanditInstance<S>, grid: GridOptions) -> Result<Self> {
        Ok(match instance.abandonment() {
            Abandonment::Binary(_) => Self::Binary(solve_binary_values(instance)?),
            Abandonment::General(_) => Self::General(solve_general_values(instance, grid)?),
        })
    }

    pub fn v_star(&self, s: S) -> Result<S> {
        match self {
            Self::Binary(b) => Ok(b.v[binary_index(s)?]),
            Self::General(g) => Ok(g.v_star(s)),
        }
    }

    pub fn q_star(&self, s: S, arm: usize) -> Result<S> {
        match self {
            Self::Binary(b) => Ok(b.q_star[arm][binary_index(s)?]),
            Self::General(g) => Ok(g.q_star(s, arm)),
        }
    }

    /// Regret charged for pulling `arm` in state `s`: `V*(s) − Q*(s, a)`.
    pub fn gap(&self, s: S, arm: usize) -> Result<S> {
        match self {
            Self::Binary(b) => Ok(b.gap[arm][binary_index(s)?]),
            Self::General(g) => Ok(g.gap(s, arm)),
        }
    }

    /// Unchecked gap for the simulator hot loop.
    #[inline]
    pub(crate) fn gap_unchecked(&self, s: S, arm: usize) -> S {
        match self {
            Self::Binary(b) => b.gap[arm][usize::from(s == S::one())],
            Self::General(g) => g.gap(s, arm),
        }
    }

    pub fn as_binary(&self) -> Option<&BinaryValues<S>> {
        match self {
            Self::Binary(b) => Some(b),
            Self::General(_) => None,
        }
    }

    pub fn as_general(&self) -> Option<&GeneralValues<S>> {
        match self {
            Self::General(g) => Some(g),
            Self::Binary(_) => None,
        }
    }
}

/// Which state carries the larger gap for every suboptimal arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapOrientation {
    /// `gap(0, a) > gap(1, a)`: a bad pull costs more in state 0.
    Standard,
    /// `gap(1, a) > gap(0, a)`.
    Opposite,
    /// Both gaps coincide.
    Degenerate,
}

impl std::fmt::Display for GapOrientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Standard => "standard",
            Self::Opposite => "opposite",
            Self::Degenerate => "degenerate",
        })
    }
}

/// Compares `gap(0, a)` with `gap(1, a)`.
///
/// `gap(0,a) − gap(1,a) = (μ(a_1) − μ(a)) · [(q(0,0)−q(1,0))V*(0) − (q(0,1)−q(1,1))V*(1)]`,
/// so the sign of the bracket decides the orientation for every arm at once.
pub fn check_orientation<S: Scalar>(q: &BinaryAbandonment<S>, values: &BinaryValues<S>) -> GapOrientation {
    let plus = (q.q00 - q.q10) * values.v[0];
    let minus = (q.q01 - q.q11) * values.v[1];
    let factor = plus - minus;
    let scale = plus.abs() + minus.abs();
    if factor.abs() <= S::lit(64.0) * S::epsilon() * scale {
        GapOrientation::Degenerate
    } else if factor > S::zero() {
        GapOrientation::Standard
    } else {
        GapOrientation::Opposite
    }
}

/// Outcome of the closed-form sufficient condition for the standard orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionVerdict {
    Satisfied,
    Violated,
    /// `q(1,0) = q(0,0)` or `q(1,1) = 1`: the condition is not defined.
    NotApplicable,
}

impl std::fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Satisfied => "satisfied",
            Self::Violated => "violated",
            Self::NotApplicable => "not applicable",
        })
    }
}

/// Evaluates
/// `(q(0,1) − q(1,1)) / (q(0,0) − q(1,0)) ≤ min{(1−q(0,1))/(1−q(1,1)), (1−q(0,0))/(1−q(1,0))}`,
/// which implies [`GapOrientation::Standard`] (or a tie).
pub fn sufficient_condition<S: Scalar>(q: &BinaryAbandonment<S>) -> ConditionVerdict {
    let one = S::one();
    if q.q10 == q.q00 || q.q11 >= one {
        return ConditionVerdict::NotApplicable;
    }
    let lhs = (q.q01 - q.q11) / (q.q00 - q.q10);
    // q(1,0) ≥ q(1,1) and q(1,1) < 1 means q(1,0) < 1 is not guaranteed
    let second = if q.q10 < one {
        (one - q.q00) / (one - q.q10)
    } else {
        S::infinity()
    };
    let rhs = ((one - q.q01) / (one - q.q11)).min(second);
    if lhs <= rhs {
        ConditionVerdict::Satisfied
    } else {
        ConditionVerdict::Violated
    }
}
