use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },

    #[error("edge ({i}, {j}) has nonpositive weight {weight}")]
    NonPositiveWeight { i: usize, j: usize, weight: f64 },

    #[error("graph must have at least one agent")]
    EmptyGraph,

    #[error("agent {0} is isolated (zero degree)")]
    IsolatedAgent(usize),

    #[error("{what} = {value} lies outside [0, 1]")]
    OutOfUnitInterval { what: &'static str, value: f64 },

    #[error("{what} = {value} must lie strictly inside (0, 1)")]
    NotInterior { what: &'static str, value: f64 },

    #[error("bias parameter {value} for agent {agent} must be positive and finite")]
    InvalidBias { agent: usize, value: f64 },

    #[error("all bias parameters equal 1 (Gamma = I); the model requires at least one biased agent")]
    IdentityBias,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graph failed validation: {0}")]
    InvalidGraph(ValidationReport),

    #[error("power iteration hit {iterations} iterations: estimate {estimate}, residual {residual:e}")]
    PowerIterationCap {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("both boundary Jacobians have lambda_max <= 1 (lambda0 = {lambda0}, lambda1 = {lambda1})")]
    ExclusivityViolated { lambda0: f64, lambda1: f64 },

    #[error("expected an interior equilibrium")]
    BoundaryEquilibrium,

    #[error("equilibrium residual {0:e} too large for stability classification")]
    ResidualTooLarge(f64),

    #[error("need at least {need} trajectory records, have {have}")]
    InsufficientRecords { have: usize, need: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
