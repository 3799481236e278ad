use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at line {line}, column `{column}`: {reason}")]
    Parse { line: u64, column: String, reason: String },

    #[error("records missing a proton plan: {}", ids.join(", "))]
    MissingProtonPlan { ids: Vec<String> },

    #[error("design is rank deficient; dependent columns: {}", columns.join(", "))]
    Collinear { columns: Vec<String> },

    #[error("complete or quasi-complete separation (|beta|_inf = {max_abs_beta:.3e})")]
    Separation { max_abs_beta: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("outcomes must be 0 or 1")]
    NonBinaryOutcome,

    #[error("model did not converge after {n_iter} iterations")]
    NotConverged { n_iter: usize },

    #[error("cannot predict for record {id}: tumor location {location} was not seen during fitting")]
    UnseenCategory { id: String, location: String },

    #[error("estimand undefined: {0}")]
    EstimandUndefined(String),

    #[error("effect scale {scale} undefined: {reason}")]
    UndefinedScale { scale: String, reason: String },

    #[error("bootstrap unstable: {failed} of {total} replicates failed")]
    UnstableBootstrap { failed: usize, total: usize },

    #[error("AUROC undefined: outcomes contain a single class")]
    UndefinedAuroc,

    #[error("too few observations ({n}) for {n_bins} bins; use fewer bins")]
    TooFewForBins { n: usize, n_bins: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("scenario {name} failed: {failed} of {total} replicates failed")]
    ScenarioFailed { name: String, failed: usize, total: usize },
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
