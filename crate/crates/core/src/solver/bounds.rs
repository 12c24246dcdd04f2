use super::{check_orientation, GapOrientation, ValueSolution};
use crate::error::{Error, Result};
use crate::kl::bernoulli_kl;
use crate::model::BanditInstance;
use crate::scalar::Scalar;

/// Constants multiplying `log K` in the asymptotic regret bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants<S> {
    /// `Σ gap(s⁺, a_i) / (2Δ_i²)` for ULCB.
    pub ulcb_ub: S,
    /// `Σ gap(s⁺, a_i) / kl(μ_i, μ_1)` for KL-ULCB.
    pub klulcb_ub: S,
    /// Lower bound over consistent policies; same formula as `klulcb_ub`.
    pub lower_bound: S,
    /// `Σ gap(s⁻, a_i) / (2Δ_i²)`, the state-blind UCB reference.
    pub ucb_ref: S,
    /// `Σ gap(s⁻, a_i) / kl(μ_i, μ_1)`, the state-blind KL-UCB reference.
    pub klucb_ref: S,
    /// Orientation used to pick `s⁺` (small-gap state) and `s⁻` (large-gap state).
    pub orientation: GapOrientation,
    /// Discretized-policy constants, general model only.
    pub disc: Option<DiscBounds<S>>,
}

/// Constants for DISC-ULCB / DISC-KL-ULCB with `n_bins` bins, using gaps at `s = (n−1)/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscBounds<S> {
    pub n_bins: usize,
    pub state: S,
    pub ulcb_ub: S,
    pub klulcb_ub: S,
}

/// `(Σ g_i / (2Δ_i²), Σ g_i / kl(μ_i, μ_1))` over suboptimal arms.
fn sums<S: Scalar>(means: &[S], gap: impl Fn(usize) -> S) -> (S, S) {
    let best = means[0];
    let two = S::lit(2.0);
    let mut quad = S::zero();
    let mut kl = S::zero();
    for (i, &mu) in means.iter().enumerate().skip(1) {
        let g = gap(i);
        let delta = best - mu;
        quad += g / (two * delta * delta);
        kl += g / bernoulli_kl(mu, best);
    }
    (quad, kl)
}

/// Bound constants of `instance` from its solved values.
///
/// Binary model: `s⁺ = 1`, `s⁻ = 0` for the standard orientation and swapped
/// for the opposite one; ties are treated as standard with a warning.
/// General model: the orientation compares `gap(0, ·)` with `gap(1, ·)` and the
/// constants use the gaps at those two endpoints; `disc_bins` adds the
/// discretized constants at `s = (n−1)/n`.
pub fn bound_constants<S: Scalar>(
    instance: &BanditInstance<S>,
    solution: &ValueSolution<S>,
    disc_bins: Option<usize>,
) -> Result<BoundConstants<S>> {
    let means = instance.arms().means();
    if means.len() < 2 {
        return Err(Error::Invalid("bound constants need at least two arms".into()));
    }
    if instance.arms().is_degenerate() {
        return Err(Error::DegenerateGap);
    }
    if means[means.len() - 1] <= S::zero() {
        return Err(Error::Invalid(
            "bound constants need every arm mean to be positive".into(),
        ));
    }
    let (zero, one) = (S::zero(), S::one());
    let orientation = match solution {
        ValueSolution::Binary(b) => check_orientation(instance.binary_abandonment()?, b),
        ValueSolution::General(g) => {
            let (g0, g1) = (g.gap_factor(zero), g.gap_factor(one));
            let scale = S::lit(1e-12) * g0.abs().max(g1.abs()).max(one);
            if (g0 - g1).abs() <= scale {
                GapOrientation::Degenerate
            } else if g0 > g1 {
                GapOrientation::Standard
            } else {
                GapOrientation::Opposite
            }
        }
    };
    if orientation == GapOrientation::Degenerate {
        log::warn!("gaps coincide in both states; using the standard orientation");
    }
    let (small, large) = match orientation {
        GapOrientation::Opposite => (zero, one),
        _ => (one, zero),
    };
    let gap_at = |s: S| move |i: usize| solution.gap_unchecked(s, i);
    let (ulcb_ub, klulcb_ub) = sums(means, gap_at(small));
    let (ucb_ref, klucb_ref) = sums(means, gap_at(large));

    let disc = match (solution, disc_bins) {
        (ValueSolution::General(_), Some(n)) => {
            if n < 2 {
                return Err(Error::Invalid(format!("bin count {n} must be at least 2")));
            }
            let state = S::from_count(n as u64 - 1) / S::from_count(n as u64);
            let (ulcb_ub, klulcb_ub) = sums(means, gap_at(state));
            Some(DiscBounds {
                n_bins: n,
                state,
                ulcb_ub,
                klulcb_ub,
            })
        }
        _ => None,
    };
    Ok(BoundConstants {
        ulcb_ub,
        klulcb_ub,
        lower_bound: klulcb_ub,
        ucb_ref,
        klucb_ref,
        orientation,
        disc,
    })
}
