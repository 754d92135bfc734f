use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite evaluation at {context}")]
    NonFiniteEvaluation { context: String },
    #[error("ill-posed prox: tau * weak_convexity = {product} >= 1")]
    IllPosedProx { product: f64 },
    #[error("proximal oracle for the coupling is not available on this problem")]
    MissingProxOracle,
    #[error("inner maximization did not reach tolerance {tol} in {max_iter} iterations (residual {residual})")]
    MaxIterExceeded {
        tol: f64,
        max_iter: usize,
        residual: f64,
    },
    #[error("trace incomplete: {0}")]
    TraceIncomplete(String),
    #[error("step size out of range: {0}")]
    OutOfRangeStepSize(String),
    #[error("denominator nonpositive: {0}")]
    DenominatorNonpositive(String),
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
