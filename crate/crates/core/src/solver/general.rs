use crate::error::{Error, Result};
use crate::model::{BanditInstance, GeneralAbandonment};
use crate::scalar::Scalar;

/// Numerical settings for the general-state value iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            grid_size: 1024,
            tol: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

pub const MIN_GRID_SIZE: usize = 64;

/// `V*` of the general model on a uniform grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralValues<S> {
    pub(crate) values: Vec<S>,
    pub(crate) abandonment: GeneralAbandonment<S>,
    pub(crate) means: Vec<S>,
    /// Sweeps performed by value iteration.
    pub iterations: usize,
    /// Sup-norm change of the final sweep.
    pub residual: f64,
}

/// Linear interpolation stencil into a uniform grid.
#[derive(Debug, Clone, Copy)]
struct Stencil<S> {
    index: usize,
    weight: S,
}

fn stencil<S: Scalar>(n: usize, s: S) -> Stencil<S> {
    let x = s.max(S::zero()).min(S::one()) * S::from_count(n as u64 - 1);
    let index = x.floor().to_usize().unwrap_or(0).min(n - 2);
    Stencil {
        index,
        weight: x - S::from_count(index as u64),
    }
}

#[inline]
fn lerp<S: Scalar>(values: &[S], st: Stencil<S>) -> S {
    values[st.index] + (values[st.index + 1] - values[st.index]) * st.weight
}

impl<S: Scalar> GeneralValues<S> {
    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    /// Grid state `i / (n − 1)`.
    pub fn state(&self, i: usize) -> S {
        S::from_count(i as u64) / S::from_count(self.values.len() as u64 - 1)
    }

    /// `(s, V*(s))` grid pairs.
    pub fn grid(&self) -> impl Iterator<Item = (S, S)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.state(i), v))
    }

    /// `V*(s)` with linear interpolation between grid points.
    pub fn v_star(&self, s: S) -> S {
        lerp(&self.values, stencil(self.values.len(), s))
    }

    /// Continuation `(1 − q(x)) V*(x)` at a successor state `x`.
    fn continuation(&self, x: S) -> S {
        (S::one() - self.abandonment.q(x)) * self.v_star(x)
    }

    pub fn q_star(&self, s: S, arm: usize) -> S {
        let mu = self.means[arm];
        let one = S::one();
        let g = &self.abandonment;
        mu + (one - mu) * self.continuation(g.advance(s, 0)) + mu * self.continuation(g.advance(s, 1))
    }

    /// `1 + (1−q(hi))V*(hi) − (1−q(lo))V*(lo)`; every gap is `(μ(a_1) − μ(a))` times this.
    pub fn gap_factor(&self, s: S) -> S {
        let g = &self.abandonment;
        S::one() + self.continuation(g.advance(s, 1)) - self.continuation(g.advance(s, 0))
    }

    /// `V*(s) − Q*(s, a)`.
    pub fn gap(&self, s: S, arm: usize) -> S {
        (self.means[0] - self.means[arm]) * self.gap_factor(s)
    }

    /// True when the grid values are non-decreasing in `s`.
    pub fn is_value_monotone(&self) -> bool {
        self.values
            .windows(2)
            .all(|w| w[1] >= w[0] - S::lit(1e-12) * w[0].abs().max(S::one()))
    }
}

struct Row<S> {
    lo: Stencil<S>,
    hi: Stencil<S>,
    c_lo: S,
    c_hi: S,
}

/// Always-best-arm Bellman operator
/// `T V(s) = μ₁ + (1−μ₁)(1−q(lo))V(lo) + μ₁(1−q(hi))V(hi)` on a uniform grid,
/// with `lo = (1−θ)s`, `hi = (1−θ)s + θ` and `V` interpolated linearly.
pub(crate) struct BellmanOperator<S> {
    rows: Vec<Row<S>>,
    mu: S,
}

impl<S: Scalar> BellmanOperator<S> {
    pub(crate) fn new(g: &GeneralAbandonment<S>, mu: S, n: usize) -> Self {
        let one = S::one();
        let rows = (0..n)
            .map(|i| {
                let s = S::from_count(i as u64) / S::from_count(n as u64 - 1);
                let (lo, hi) = (g.advance(s, 0), g.advance(s, 1));
                Row {
                    lo: stencil(n, lo),
                    hi: stencil(n, hi),
                    c_lo: (one - mu) * (one - g.q(lo)),
                    c_hi: mu * (one - g.q(hi)),
                }
            })
            .collect();
        Self { rows, mu }
    }

    /// Writes `T V` into `out` and returns `‖T V − V‖∞`.
    pub(crate) fn apply(&self, values: &[S], out: &mut [S]) -> S {
        let mut residual = S::zero();
        for (i, row) in self.rows.iter().enumerate() {
            let v = self.mu + row.c_lo * lerp(values, row.lo) + row.c_hi * lerp(values, row.hi);
            residual = residual.max((v - values[i]).abs());
            out[i] = v;
        }
        residual
    }
}

/// Value iteration of [`BellmanOperator`] from `V ≡ 0` until the sup-norm
/// change drops below `options.tol`.
pub fn solve_general_values<S: Scalar>(instance: &BanditInstance<S>, options: GridOptions) -> Result<GeneralValues<S>> {
    let g = instance.general_abandonment()?;
    if options.grid_size < MIN_GRID_SIZE {
        return Err(Error::Invalid(format!(
            "grid size {} below the minimum of {MIN_GRID_SIZE}",
            options.grid_size
        )));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance {} must be positive", options.tol)));
    }
    let n = options.grid_size;
    let op = BellmanOperator::new(g, instance.arms().best(), n);
    let tol = S::lit(options.tol);
    let mut values = vec![S::zero(); n];
    let mut next = vec![S::zero(); n];
    let mut residual = S::infinity();
    for iteration in 1..=options.max_iterations {
        residual = op.apply(&values, &mut next);
        std::mem::swap(&mut values, &mut next);
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok(GeneralValues {
                values,
                abandonment: g.clone(),
                means: instance.arms().means().to_vec(),
                iterations: iteration,
                residual: residual.as_f64(),
            });
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        residual: residual.as_f64(),
    })
}

/// True when `gap(·, a)` is non-increasing in `s` on the solution grid for every arm.
pub fn check_gap_monotonicity<S: Scalar>(solution: &GeneralValues<S>) -> bool {
    let n = solution.grid_size();
    (1..solution.means.len()).all(|arm| {
        let mut prev = solution.gap(solution.state(0), arm);
        (1..n).all(|i| {
            let gap = solution.gap(solution.state(i), arm);
            let ok = gap <= prev + S::lit(1e-9) * prev.abs().max(S::one());
            prev = gap;
            ok
        })
    })
}
