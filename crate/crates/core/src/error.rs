use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A modelling assumption (arm ordering, abandonment monotonicity, ...) does not hold.
    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("arm index {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("state {0} is outside the state space")]
    InvalidState(f64),

    #[error("operation requires a {expected} abandonment model")]
    WrongModel { expected: &'static str },

    #[error("linear system is singular (always-best-arm chain is not proper)")]
    Singular,

    #[error("value iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("best and second-best arm means coincide; bound constants are undefined")]
    DegenerateGap,

    #[error("brute-force enumeration over {arms} arms exceeds the budget of {max}")]
    EnumerationBudget { arms: usize, max: usize },

    #[error("policy kind {0} needs a Q-table")]
    MissingQTable(&'static str),

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("trace I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
