use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature for class {class} did not reach tolerance after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureFailure {
        class: usize,
        subdivisions: usize,
        error: f64,
    },

    #[error("class probabilities sum to 1 {residual:+e}; residual exceeds 1e-9")]
    NormalizationFailure { residual: f64 },

    #[error("group conversion maps order {order} to {reduced}, which is not above 1")]
    OrderUnderflow { order: f64, reduced: f64 },

    #[error("invalid count: {successes} successes out of {trials} trials")]
    InvalidCount { successes: u64, trials: u64 },

    #[error("output set is empty or covers every class")]
    EmptySet,

    #[error("tally has zero trials on at least one side")]
    DegenerateTally,

    #[error("order grids differ between curves")]
    GridMismatch,

    #[error("vote model is {found}, sampler expects {expected}")]
    VariantMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fixture invariant violated: {0}")]
    Fixture(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
