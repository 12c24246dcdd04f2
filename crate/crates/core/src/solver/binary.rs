use crate::error::{Error, Result};
use crate::model::{BanditInstance, BinaryAbandonment};
use crate::scalar::Scalar;

/// Exact optimal values of the binary model.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryValues<S> {
    /// `V*(0)`, `V*(1)`.
    pub v: [S; 2],
    /// `Q*(s, a)` indexed `[arm][state]`, sorted arm order.
    pub q_star: Vec<[S; 2]>,
    /// `V*(s) − Q*(s, a)` indexed `[arm][state]`.
    pub gap: Vec<[S; 2]>,
}

impl<S: Scalar> BinaryValues<S> {
    pub fn v0(&self) -> S {
        self.v[0]
    }

    pub fn v1(&self) -> S {
        self.v[1]
    }
}

/// Solves `x = b + P x` for the two live states of a stationary policy, where
/// `P` is the live part of the kernel. Returns `None` for singular systems.
fn solve_policy_system<S: Scalar>(q: &BinaryAbandonment<S>, mu: [S; 2], rhs: [S; 2]) -> Option<[S; 2]> {
    let one = S::one();
    // row s: x_s − (1−μ_s)(1−q(s,0)) x_0 − μ_s(1−q(s,1)) x_1 = rhs_s
    let a00 = one - (one - mu[0]) * (one - q.q00);
    let a01 = -(mu[0] * (one - q.q01));
    let a10 = -((one - mu[1]) * (one - q.q10));
    let a11 = one - mu[1] * (one - q.q11);
    let det = a00 * a11 - a01 * a10;
    if !(det.abs() > S::epsilon()) {
        return None;
    }
    let x0 = (rhs[0] * a11 - a01 * rhs[1]) / det;
    let x1 = (a00 * rhs[1] - a10 * rhs[0]) / det;
    Some([x0, x1])
}

/// Value vector `[V(0), V(1)]` of the stationary policy pulling `policy[s]` in state `s`.
pub fn evaluate_stationary_policy<S: Scalar>(instance: &BanditInstance<S>, policy: [usize; 2]) -> Result<[S; 2]> {
    let q = instance.binary_abandonment()?;
    let mu = [instance.arms().mean(policy[0])?, instance.arms().mean(policy[1])?];
    solve_policy_system(q, mu, mu).ok_or(Error::Singular)
}

/// `V*`, `Q*` and gaps of the binary model.
///
/// The best arm is optimal in every state, so `V*` solves the linear system of
/// the always-best-arm chain; `Q*(s,a) = μ(a) + P(0|s,a)V*(0) + P(1|s,a)V*(1)`.
/// Gaps use the factored form
/// `(μ(a_1) − μ(a)) · (1 + (1−q(s,1))V*(1) − (1−q(s,0))V*(0))`,
/// which is exactly zero for the best arm.
pub fn solve_binary_values<S: Scalar>(instance: &BanditInstance<S>) -> Result<BinaryValues<S>> {
    let q = instance.binary_abandonment()?;
    let arms = instance.arms();
    let best = arms.best();
    let v = solve_policy_system(q, [best, best], [best, best]).ok_or(Error::Singular)?;
    let one = S::one();
    let mut q_star = Vec::with_capacity(arms.len());
    let mut gap = Vec::with_capacity(arms.len());
    for &mu in arms.means() {
        let mut qs = [S::zero(); 2];
        let mut gs = [S::zero(); 2];
        for s in 0..2 {
            let (q0, q1) = (q.q(s, 0), q.q(s, 1));
            qs[s] = mu + (one - mu) * (one - q0) * v[0] + mu * (one - q1) * v[1];
            gs[s] = (best - mu) * (one + (one - q1) * v[1] - (one - q0) * v[0]);
        }
        q_star.push(qs);
        gap.push(gs);
    }
    Ok(BinaryValues { v, q_star, gap })
}

/// Expected episode lengths `[E[I|0], E[I|1]]` under the always-best-arm
/// policy, which maximizes expected episode length over all policies.
pub fn expected_episode_length<S: Scalar>(instance: &BanditInstance<S>) -> Result<[S; 2]> {
    let q = instance.binary_abandonment()?;
    let best = instance.arms().best();
    solve_policy_system(q, [best, best], [S::one(), S::one()]).ok_or(Error::Singular)
}

/// Largest arm count [`verify_optimal_policy`] will enumerate.
pub const ENUMERATION_MAX_ARMS: usize = 8;

/// Brute-force check that always pulling the best arm is optimal: evaluates all
/// `M²` stationary deterministic policies and compares value vectors.
pub fn verify_optimal_policy<S: Scalar>(instance: &BanditInstance<S>) -> Result<bool> {
    let m = instance.num_arms();
    if m > ENUMERATION_MAX_ARMS {
        return Err(Error::EnumerationBudget {
            arms: m,
            max: ENUMERATION_MAX_ARMS,
        });
    }
    let genie = evaluate_stationary_policy(instance, [0, 0])?;
    let mut best = genie;
    for a0 in 0..m {
        for a1 in 0..m {
            let v = evaluate_stationary_policy(instance, [a0, a1])?;
            best[0] = best[0].max(v[0]);
            best[1] = best[1].max(v[1]);
        }
    }
    let tol = |x: S| S::lit(1e-10) * x.abs().max(S::one());
    Ok((0..2).all(|s| genie[s] >= best[s] - tol(best[s])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BinaryAbandonment;
    use approx::assert_abs_diff_eq;

    fn inst(means: &[f64], q: [f64; 4]) -> BanditInstance<f64> {
        let q = BinaryAbandonment::new(q[0], q[1], q[2], q[3]).unwrap();
        BanditInstance::binary(means, q).unwrap()
    }

    #[test]
    fn simple_instance_values() {
        // hand solution: V0 = 0.9 + 0.9 V1, V1 = 0.9 + 0.1 V0 + 0.9 V1
        let sol = solve_binary_values(&inst(&[0.9, 0.8], [1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(sol.v1(), 99.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.v0(), 90.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.gap[1][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.gap[1][0], 10.0, epsilon = 1e-12);
        assert_eq!(sol.gap[0], [0.0, 0.0]);
        assert_abs_diff_eq!(sol.q_star[1][1], 98.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.q_star[1][0], 80.0, epsilon = 1e-10);
    }

    #[test]
    fn immediate_abandonment_is_one_step() {
        let sol = solve_binary_values(&inst(&[0.7, 0.4, 0.1], [1.0; 4])).unwrap();
        assert_abs_diff_eq!(sol.v0(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.v1(), 0.7, epsilon = 1e-15);
        for (arm, mu) in [0.7, 0.4, 0.1].into_iter().enumerate() {
            for s in 0..2 {
                assert_abs_diff_eq!(sol.gap[arm][s], 0.7 - mu, epsilon = 1e-15);
            }
        }
        let len = expected_episode_length(&inst(&[0.7, 0.4], [1.0; 4])).unwrap();
        assert_eq!(len, [1.0, 1.0]);
    }

    #[test]
    fn episode_lengths_simple_instance() {
        let i = inst(&[0.9, 0.8], [1.0, 0.0, 0.0, 0.0]);
        let len = expected_episode_length(&i).unwrap();
        assert_abs_diff_eq!(len[1], 110.0, epsilon = 1e-10);
        assert_abs_diff_eq!(len[0], 100.0, epsilon = 1e-10);
        let v = solve_binary_values(&i).unwrap();
        assert_abs_diff_eq!(v.v1(), 0.9 * len[1], epsilon = 1e-10);
    }

    #[test]
    fn genie_is_optimal() {
        assert!(verify_optimal_policy(&inst(&[0.9, 0.8], [1.0, 0.0, 0.0, 0.0])).unwrap());
        assert!(verify_optimal_policy(&inst(&[0.5, 0.5], [0.6, 0.3, 0.2, 0.1])).unwrap());
        let many = inst(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1], [1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            verify_optimal_policy(&many),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn single_precision_solve() {
        let q = BinaryAbandonment::new(1.0f32, 0.0, 0.0, 0.0).unwrap();
        let i = BanditInstance::binary(&[0.9f32, 0.8], q).unwrap();
        let sol = solve_binary_values(&i).unwrap();
        assert!((sol.v1() - 99.0).abs() < 1e-3);
        assert!((sol.gap[1][0] - 10.0).abs() < 1e-3);
    }
}
