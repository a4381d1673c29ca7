//! Crate-wide error type.
//!
//! Validation of raw MDP data has its own report type ([`MdpViolation`])
//! because "is this instance well formed?" is an answer, not a failure; it is
//! wrapped into [`Error`] only when an operation cannot proceed without a
//! valid instance.

use crate::mdp::MdpViolation;

/// Balance diagnostic attached to half-mass failures of the strategy split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceCheck {
    /// L1 mass of the first-player half of the weight vector.
    pub x_mass: f64,
    /// L1 mass of the second-player half.
    pub y_mass: f64,
    /// Product of the two half masses.
    pub product: f64,
    /// True when the product falls below the 2/9 solution threshold.
    pub flagged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(#[from] MdpViolation),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(&'static str),

    #[error("invalid mixture weight: {0}")]
    InvalidWeight(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("policies {first} and {second} agree on every separator state")]
    SeparatorUnseparated { first: usize, second: usize },

    #[error("policies {first} and {second} are identical; no separator exists")]
    InseparableClass { first: usize, second: usize },

    #[error("state index {state} out of range (have {states} states)")]
    StateOutOfRange { state: usize, states: usize },

    #[error(
        "game entry {which}[{row}][{col}] = {value} outside [0, 1]; \
         the reduction requires a positively normalized game"
    )]
    GameNotNormalized {
        which: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error(
        "weight half has no mass (x: {x_mass}, y: {y_mass}); strategy split undefined",
        x_mass = .0.x_mass,
        y_mass = .0.y_mass
    )]
    UnbalancedWeight(BalanceCheck),

    #[error("expert feedback violates the advantage/disagreement sandwich at state {state}, action {action}: {detail}")]
    SandwichViolation {
        state: usize,
        action: usize,
        detail: String,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("unknown check suite `{0}`")]
    UnknownSuite(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
