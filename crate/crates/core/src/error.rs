use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite field value at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("no pulse: Newton iteration failed after {iterations} iterations, residual {residual:e}")]
    NoPulse { iterations: usize, residual: f64 },

    #[error("degenerate pulse: {0}")]
    DegeneratePulse(String),

    #[error("ill-conditioned nullspace: second-smallest eigenvalue magnitude {second:e} below {threshold:e}")]
    IllConditionedNullspace { second: f64, threshold: f64 },

    #[error("off manifold: correlation curvature {curvature:e} does not exceed threshold {threshold:e}")]
    OffManifold { curvature: f64, threshold: f64 },

    #[error("left basin at t = {time}: tube distance {distance:e} exceeds {limit:e}")]
    LeftBasin { time: f64, distance: f64, limit: f64 },

    #[error("mode {mode}: {source}")]
    Mode {
        mode: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("noise nondegeneracy assumption violated: {0}")]
    Nondegeneracy(String),

    #[error("degenerate generator: {0}")]
    DegenerateGenerator(String),

    #[error("stationary density not positive (min {min:e}); increase the resolution")]
    PositivityFailure { min: f64 },

    #[error("discretization inconsistency: {0}")]
    DiscretizationInconsistency(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
