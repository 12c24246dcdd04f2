use super::AgentState;
use crate::error::{Error, Result};
use crate::kl::{self, Side};
use crate::scalar::Scalar;

/// `coeff·ln t + c·ln ln t`. The `ln ln t` term is dropped when `c = 0` and
/// counts as `0` while `ln t ≤ 0`.
#[inline]
pub fn log_threshold<S: Scalar>(coeff: S, c: S, ln_t: S) -> S {
    let mut thr = coeff * ln_t;
    if c != S::zero() && ln_t > S::zero() {
        thr += c * ln_t.ln();
    }
    thr
}

/// `μ̄ + coeff·√(radicand / 2N)` with a negative radicand clamped to zero.
#[inline]
pub(crate) fn ulcb_value<S: Scalar>(mean: S, n: u64, coeff: S, radicand: S) -> S {
    if coeff == S::zero() {
        return mean;
    }
    let r = radicand.max(S::zero());
    mean + coeff * (r / (S::lit(2.0) * S::from_count(n))).sqrt()
}

/// ULCB index `μ̄(a) + coeff·√((ln t + c·ln ln t) / 2N(a))`.
pub fn ulcb_index<S: Scalar>(agent: &AgentState, arm: usize, coeff: S, c: S) -> Result<S> {
    if arm >= agent.num_arms() {
        return Err(Error::ArmOutOfRange {
            arm,
            arms: agent.num_arms(),
        });
    }
    let mean = agent
        .mean::<S>(arm)
        .ok_or_else(|| Error::Policy(format!("arm {arm} has not been pulled yet")))?;
    let ln_t = S::from_count(agent.t()).ln();
    Ok(ulcb_value(
        mean,
        agent.count(arm),
        coeff,
        log_threshold(S::one(), c, ln_t),
    ))
}

/// KL confidence index on `side` of `mean`.
#[inline]
pub(crate) fn kl_value<S: Scalar>(mean: S, n: u64, threshold: S, side: Side) -> S {
    kl::invert(mean, n, threshold, side, None)
}

/// Largest `x(1 − x)` over `[a, b]`.
#[inline]
fn max_var<S: Scalar>(a: S, b: S) -> S {
    let half = S::lit(0.5);
    if a <= half && half <= b {
        S::lit(0.25)
    } else {
        (a * (S::one() - a)).max(b * (S::one() - b))
    }
}

/// Cheap enclosure of the true upper KL index `u` of `mean`:
/// `lo ≤ u ≤ hi`, from `(p−μ̄)²/(2 max x(1−x)) ≤ kl(μ̄,p) ≤ (p−μ̄)²/(2 min x(1−x))`.
#[inline]
fn upper_enclosure<S: Scalar>(mean: S, n: u64, threshold: S) -> (S, S) {
    let one = S::one();
    let two = S::lit(2.0);
    let ratio = threshold / S::from_count(n);
    let pinsker = (mean + (ratio / two).sqrt()).min(one);
    let hi = (mean + (two * max_var(mean, pinsker) * ratio).sqrt()).min(one);
    let w = (mean * (one - mean)).min(hi * (one - hi));
    let lo = mean + (two * w * ratio).sqrt().min(hi - mean);
    (lo, hi)
}

/// Interval `[lo, hi]` guaranteed to contain the index computed by
/// [`kl_value`]; exact (`lo == hi`) when no search happens.
#[inline]
pub(crate) fn kl_value_bounds<S: Scalar>(mean: S, n: u64, threshold: S, side: Side) -> (S, S, bool) {
    if !(threshold > S::zero()) || n == 0 {
        return (mean, mean, true);
    }
    let one = S::one();
    let slack = S::lit(2.0) * kl::tolerance::<S>();
    match side {
        Side::Upper => {
            let (lo, hi) = upper_enclosure(mean, n, threshold);
            (lo.min(one - kl::domain_margin::<S>()) - slack, hi + slack, false)
        }
        Side::Lower => {
            let (lo, hi) = upper_enclosure(one - mean, n, threshold);
            (
                (one - hi) - slack,
                (one - lo).max(kl::domain_margin::<S>()) + slack,
                false,
            )
        }
    }
}

/// `|d index / d threshold|` at a computed index `p`; an upper bound on the
/// slope at the true index because the computed value lies on the inner side.
#[inline]
pub(crate) fn kl_slope<S: Scalar>(mean: S, n: u64, p: S) -> S {
    let dist = (p - mean).abs();
    if dist > S::zero() {
        p * (S::one() - p) / (S::from_count(n) * dist)
    } else {
        S::infinity()
    }
}
