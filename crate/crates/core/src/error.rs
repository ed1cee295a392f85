use thiserror::Error;

/// Errors produced by surrogate construction and evaluation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),

    #[error("sample count must be at least 1")]
    EmptySample,

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("evaluation point {x} outside domain [{lower}, {upper}]")]
    OutOfDomain { x: f64, lower: f64, upper: f64 },

    #[error("coordinate {coordinate}: need at least 2 distinct abscissae, got {distinct}")]
    DegenerateProfile { coordinate: usize, distinct: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("marginal support [{marginal_lower}, {marginal_upper}] does not match knot domain [{knot_lower}, {knot_upper}]")]
    SupportMismatch {
        marginal_lower: f64,
        marginal_upper: f64,
        knot_lower: f64,
        knot_upper: f64,
    },

    #[error("moment matrix is not positive definite at leading minor {minor}")]
    NotPositiveDefinite { minor: usize },

    #[error("moment matrix for coordinate {coordinate} is ill-conditioned (estimate {condition:.3e}); closest knots {knot_a} and {knot_b}")]
    IllConditioned {
        coordinate: usize,
        condition: f64,
        knot_a: f64,
        knot_b: f64,
    },

    #[error("interaction order {order} out of range 1..={dims}")]
    InvalidOrder { order: usize, dims: usize },

    #[error("design matrix has {rows} rows but {cols} columns; least squares needs rows >= columns")]
    UnderDetermined { rows: usize, cols: usize },

    #[error("design matrix is rank deficient (smallest pivot magnitude {pivot:.3e})")]
    RankDeficient { pivot: f64 },

    #[error("lambda grid must be non-empty, strictly positive, and decreasing")]
    InvalidLambdaGrid,

    #[error("cross-validation error is not finite at lambda {lambda:.3e}")]
    NonFiniteCvError { lambda: f64 },

    #[error("fold count must be at least 2 and at most the sample count ({samples}), got {folds}")]
    InvalidFolds { folds: usize, samples: usize },

    #[error("dataset row {row}: {message}")]
    DatasetParse { row: usize, message: String },

    #[error("dataset has {found} input columns, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rows outside the input support box: {}{}", format_rows(.rows), if *.truncated { ", ..." } else { "" })]
    OutOfSupport { rows: Vec<usize>, truncated: bool },

    #[error("coefficient count {coefficients} does not match basis count {basis}")]
    CoefficientMismatch { coefficients: usize, basis: usize },

    #[error("realized system is not physical: {0}")]
    UnphysicalSystem(String),

    #[error("dynamic stiffness matrix is singular at omega = {omega} rad/s")]
    SingularSystem { omega: f64 },

    #[error("reference variance is zero; relative metrics are undefined")]
    ZeroVariance,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

fn format_rows(rows: &[usize]) -> String {
    rows.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
