use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} is not a non-negative multiple of grid step {step}")]
    OffGridValue { value: f64, step: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    ProbSumMismatch { sum: f64 },

    #[error("distribution puts all mass on 0")]
    TrivialDistribution,

    #[error("unsupported distribution family: {0}")]
    UnsupportedFamily(String),

    #[error("buyer choice is not threshold-shaped in the price of item {item}")]
    NonThresholdBehavior { item: usize },

    #[error("sum support of {ticks} grid points exceeds the limit of {limit}")]
    GridOverflow { ticks: u128, limit: u128 },

    #[error("{0}")]
    UnsupportedMenuAtScale(String),

    #[error("work budget exceeded: needed {needed}, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("summand {index} has zero variance")]
    ZeroVarianceSummand { index: usize },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
