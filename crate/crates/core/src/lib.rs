//! Multi-armed bandits where each episode ends when the user abandons.
//!
//! The crate covers the environment model, exact and grid value solvers with
//! asymptotic regret constants, state-dependent index policies plus
//! Q-learning baselines, and a reproducible parallel Monte-Carlo regret
//! harness. Everything numeric is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64`.

pub mod error;
pub mod kl;
pub mod model;
pub mod policy;
pub mod scalar;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use kl::{bernoulli_kl, kl_index_lower, kl_index_upper};
pub use model::{
    Abandonment, AbandonmentCurve, ArmSet, BanditInstance, BinaryAbandonment, GeneralAbandonment, InitialState,
    NextState, Reward, StepOutcome,
};
pub use policy::{select_action, AgentState, Learner, Orientation, PolicyKind, PolicySpec, QTable};
pub use scalar::Scalar;
pub use sim::{cross_validate_estimators, monte_carlo, run_trial, Estimator, RegretTrace, SimConfig};
pub use solver::{
    bound_constants, check_gap_monotonicity, check_orientation, expected_episode_length, solve_binary_values,
    solve_general_values, sufficient_condition, verify_optimal_policy, BoundConstants, ConditionVerdict,
    GapOrientation, GridOptions, ValueSolution,
};

pub type Instance = BanditInstance<f64>;
pub type Instance32 = BanditInstance<f32>;
pub type Policy = PolicySpec<f64>;
pub type Policy32 = PolicySpec<f32>;
pub type Config = SimConfig<f64>;
pub type Config32 = SimConfig<f32>;
pub type Solution = ValueSolution<f64>;
pub type Solution32 = ValueSolution<f32>;
pub type Bounds = BoundConstants<f64>;
pub type Bounds32 = BoundConstants<f32>;
