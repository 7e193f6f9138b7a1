use thiserror::Error;

/// Errors produced by network construction, moment evaluation, solvers and
/// bound computations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("no path from node {origin} to node {destination} for commodity {commodity}")]
    NoPathExists {
        commodity: String,
        origin: String,
        destination: String,
    },

    #[error("raw moment of order {order} unavailable (moment table stores orders 1..={stored})")]
    MomentUnavailable { order: usize, stored: usize },

    #[error("cannot sample from a moment-table demand (no distribution is implied by its moments)")]
    SamplingUnavailable,

    #[error("degenerate cost: {0}")]
    DegenerateCost(String),

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("constant cost has no monomial terms of positive degree; the crossing point is undefined")]
    ConstantCost,

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
