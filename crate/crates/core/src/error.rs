use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain box")]
    Domain { point: Vec<f64> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("landscape definition violates isolated-minima assumption: {0}")]
    LandscapeDefinition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("degenerate curvature: lambda_min + lambda = 0")]
    DegenerateCurvature,

    #[error("radius {r} exceeds the disjointness radius r0 = {r0}")]
    Radius { r: f64, r0: f64 },

    #[error("sampler kind error: {0}")]
    Kind(String),

    #[error("SGLD diverged at step {step} with step size eta = {step_size}")]
    Divergence { step_size: f64, step: usize },

    #[error("only {retained} samples retained by conditioning (need at least {required})")]
    InsufficientConditioning { retained: usize, required: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("quadrature under-resolved: {message}; try at least {suggested_nodes} nodes per standard deviation")]
    Resolution {
        message: String,
        suggested_nodes: usize,
    },

    #[error("iteration failed to converge: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
