use thiserror::Error;

/// Errors produced by the form calculus, the fixtures and the CLI driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {n}")]
    Index { index: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value kind mismatch: {0}")]
    Kind(String),

    #[error("degree error: {0}")]
    Degree(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("fields live on different geometries")]
    GeometryMismatch,

    #[error("integration unsupported on non-periodic chart")]
    IntegrationUnsupported,

    #[error("formal adjoint implemented for metric connections only")]
    NonMetricConnection,

    #[error("not an almost-complex structure: max |A∘A + Id| = {residual:.3e}")]
    NotAlmostComplex { residual: f64 },

    #[error("metric is not positive definite at node {node}")]
    SingularMetric { node: usize },

    #[error("auxiliary 1-form is identically zero")]
    TrivialAlpha,

    #[error("variant requires an auxiliary closed 1-form")]
    MissingAlpha,

    #[error("invalid variant: {0}")]
    Variant(String),

    #[error("conjugate gradient did not converge: residual {residual:.3e} after {iterations} iterations")]
    CgNonConvergence { residual: f64, iterations: usize },

    #[error("flow diverged at step {step}")]
    FlowDivergence { step: usize },

    #[error("path sample at t = {t} is not almost-complex (residual {residual:.3e})")]
    PathNotAlmostComplex { t: f64, residual: f64 },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
