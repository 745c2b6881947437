use thiserror::Error;

use crate::coeffs::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("coefficient error: {name} = {value} at x = {x}, t = {t}: {reason}")]
    Coefficient {
        name: String,
        reason: String,
        x: f64,
        t: f64,
        value: f64,
    },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("singular tridiagonal system (pivot {pivot:e} in row {row})")]
    Solve { row: usize, pivot: f64 },

    #[error("coupling is not cooperative: entry ({row},{col}) = {value} at x = {x}, t = {t}")]
    NotCooperative {
        row: usize,
        col: usize,
        x: f64,
        t: f64,
        value: f64,
    },

    #[error("solution exceeded the blow-up cap {cap:e} at t = {t}")]
    Blowup { cap: f64, t: f64 },

    #[error("{what} did not converge within {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("upper and lower periodic limits differ by {gap:e} (allowed {allowed:e})")]
    NonUniqueOrbit { gap: f64, allowed: f64 },

    #[error("monotone iteration gap {gap:e} exceeds {allowed:e}")]
    Gap { gap: f64, allowed: f64 },

    #[error("epsilon {eps} too large: V - |eps| phi = {margin:e} at node {node}, level {level}")]
    EpsilonTooLarge {
        eps: f64,
        node: usize,
        level: usize,
        margin: f64,
    },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("internal error: {0}")]
    Internal(String),
}
