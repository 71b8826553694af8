use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the toolkit.
///
/// The iterate carried by [`Error::Convergence`] is stored as `f64` so the
/// error type stays independent of the scalar the solver ran with; widening
/// from `f32` is exact.
#[derive(Debug, Error)]
pub enum Error {
    /// Input cells or matrices that fail to parse or are non-finite.
    #[error("malformed input: {detail}")]
    MalformedInput { detail: String },

    /// Structural mismatch: missing columns, unknown classes, wrong shapes.
    #[error("schema error: {detail}")]
    Schema { detail: String },

    /// Too few rows for the requested statistic or split.
    #[error("insufficient data: {detail}")]
    InsufficientData { detail: String },

    /// A class cannot be split at the requested train fraction.
    #[error("degenerate split: {detail}")]
    DegenerateSplit { detail: String },

    /// The dual constraint set Σα = 1, 0 ≤ α ≤ C is empty.
    #[error("infeasible constraints: N·C = {n}·{c} < 1 leaves no feasible α")]
    Infeasible { n: usize, c: f64 },

    /// KKT tolerance not reached within the update budget. Carries the best
    /// feasible iterate so callers may recover it.
    #[error("solver did not converge within {passes} passes (KKT residual {residual:.3e})")]
    Convergence {
        passes: usize,
        residual: f64,
        best_alpha: Vec<f64>,
        best_objective: f64,
    },

    /// Invalid hyperparameters or incompatible option combinations.
    #[error("configuration error: {detail}")]
    Configuration { detail: String },

    /// Projection rows that collapsed to a rank-deficient matrix.
    #[error("degenerate projection: row {row} is linearly dependent on the rows before it")]
    DegenerateProjection { row: usize },

    /// A cross-validation fold without validation positives.
    #[error("degenerate fold {fold}: no target rows available for validation")]
    DegenerateFold { fold: usize },

    /// Recall requested on a set with zero positives.
    #[error("no positives in test set: recall is undefined")]
    NoPositivesInTest,

    /// Numeric self-checks that failed beyond their guard bands.
    #[error("internal consistency: {detail}")]
    Internal { detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn malformed(detail: impl Into<String>) -> Self {
        Error::MalformedInput { detail: detail.into() }
    }

    pub fn schema(detail: impl Into<String>) -> Self {
        Error::Schema { detail: detail.into() }
    }

    pub fn config(detail: impl Into<String>) -> Self {
        Error::Configuration { detail: detail.into() }
    }
}
