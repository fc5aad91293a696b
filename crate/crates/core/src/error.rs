use thiserror::Error;

/// Errors raised by the solver, the estimate harness and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: String, value: f64 },

    #[error("x-form derivative requested at s = {s} below s_floor = {floor}; use the s-form operators")]
    BelowSFloor { s: f64, floor: f64 },

    #[error("empty intersection: {0}")]
    EmptyRegion(String),

    #[error("coefficient error: {0}")]
    Coefficients(String),

    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("solver produced a non-finite value at step {step}")]
    SolverNaN { step: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parameter search exhausted after {iterations} iterations: {detail}")]
    SearchExhausted { iterations: usize, detail: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
