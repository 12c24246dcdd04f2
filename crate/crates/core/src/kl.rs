//! Bernoulli KL divergence and its confidence-bound inversions.

use crate::scalar::Scalar;

/// `kl(p, q)` between Bernoulli(p) and Bernoulli(q), in nats.
///
/// Uses `0·ln 0 = 0` and returns `+∞` when `q ∈ {0, 1}` and `p ≠ q`.
#[inline]
pub fn bernoulli_kl<S: Scalar>(p: S, q: S) -> S {
    if p == q {
        return S::zero();
    }
    let one = S::one();
    if q <= S::zero() || q >= one {
        return S::infinity();
    }
    let a = if p > S::zero() { p * (p / q).ln() } else { S::zero() };
    let b = if p < one {
        (one - p) * ((one - p) / (one - q)).ln()
    } else {
        S::zero()
    };
    (a + b).max(S::zero())
}

/// Largest `p ∈ [μ̄, 1]` with `n · kl(μ̄, p) ≤ threshold`.
///
/// The returned point always satisfies the budget; it is within `1e-9` of the
/// exact boundary (or of the clamped search domain `[1e-12, 1 − 1e-12]`).
pub fn kl_index_upper<S: Scalar>(mu_bar: S, n: u64, threshold: S) -> S {
    invert(mu_bar, n, threshold, Side::Upper, None)
}

/// Smallest `p ∈ [0, μ̄]` with `n · kl(μ̄, p) ≤ threshold`. Mirror of [`kl_index_upper`].
pub fn kl_index_lower<S: Scalar>(mu_bar: S, n: u64, threshold: S) -> S {
    invert(mu_bar, n, threshold, Side::Lower, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Upper,
    Lower,
}

pub(crate) const MAX_ITERATIONS: usize = 100;

pub(crate) fn domain_margin<S: Scalar>() -> S {
    S::lit(1e-12).max(S::epsilon())
}

pub(crate) fn tolerance<S: Scalar>() -> S {
    S::lit(1e-9).max(S::epsilon() * S::lit(8.0))
}

/// Inverts `p ↦ n·kl(μ̄, p)` on one side of `μ̄`.
///
/// `n·kl(μ̄, ·)` is convex on either side of `μ̄`, so a Newton step taken from
/// an infeasible point never crosses the boundary and the chord through a
/// feasible and an infeasible point always lands on the feasible side. Both
/// ends of the bracket therefore converge, with bisection as a fallback when
/// the bracket stalls. `hint`, when given, is a feasible point from a previous
/// solve with a smaller threshold.
pub(crate) fn invert<S: Scalar>(mu: S, n: u64, threshold: S, side: Side, hint: Option<S>) -> S {
    let one = S::one();
    let margin = domain_margin::<S>();
    let tol = tolerance::<S>();
    if !(threshold > S::zero()) || n == 0 {
        return mu;
    }
    let (edge, toward) = match side {
        Side::Upper => (one - margin, one),
        Side::Lower => (margin, -one),
    };
    // nothing to search between μ̄ and the clamped edge
    if (edge - mu) * toward <= S::zero() {
        return mu;
    }
    let nf = S::from_count(n);
    let f = |p: S| nf * bernoulli_kl(mu, p) - threshold;
    let df = |p: S| nf * (p - mu) / (p * (one - p));

    if f(edge) <= S::zero() {
        return edge;
    }
    // Pinsker: kl(μ̄, p) ≥ 2(p − μ̄)², so this point is never feasible.
    let pinsker = mu + toward * (threshold / (S::lit(2.0) * nf)).sqrt();
    let mut bad = if (edge - pinsker) * toward > S::zero() {
        pinsker
    } else {
        edge
    };
    let mut f_bad = f(bad);
    if f_bad <= S::zero() {
        return bad;
    }
    let mut good = mu;
    let mut f_good = -threshold;
    if let Some(h) = hint {
        if (h - mu) * toward > S::zero() && (bad - h) * toward > S::zero() {
            let fh = f(h);
            if fh <= S::zero() {
                good = h;
                f_good = fh;
            }
        }
    }

    for _ in 0..MAX_ITERATIONS {
        let width = (bad - good).abs();
        if width <= tol && -f_good <= tol {
            break;
        }
        if width <= S::epsilon() * (one + good.abs()) * S::lit(4.0) {
            break;
        }
        let probe = |p: S, good: &mut S, f_good: &mut S, bad: &mut S, f_bad: &mut S| {
            let inside = (p - *good) * toward > S::zero() && (*bad - p) * toward > S::zero();
            if !inside {
                return false;
            }
            let fp = f(p);
            if fp <= S::zero() {
                *good = p;
                *f_good = fp;
            } else {
                *bad = p;
                *f_bad = fp;
            }
            true
        };
        let newton = bad - f_bad / df(bad);
        let moved_newton = newton.is_finite() && probe(newton, &mut good, &mut f_good, &mut bad, &mut f_bad);
        let chord = good - f_good * (bad - good) / (f_bad - f_good);
        let moved_chord = chord.is_finite() && probe(chord, &mut good, &mut f_good, &mut bad, &mut f_bad);
        if !(moved_newton || moved_chord) || (bad - good).abs() > width * S::lit(0.5) {
            let mid = (good + bad) * S::lit(0.5);
            probe(mid, &mut good, &mut f_good, &mut bad, &mut f_bad);
        }
    }
    good
}
