use thiserror::Error;

/// Errors produced by the toolkit.
///
/// The variants are grouped by how the command line reports them: `Data`-like
/// variants map to exit code 2 and `Invariant` to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("events without case attribute `{attr}`: {}", event_ids.join(", "))]
    MissingCase { attr: String, event_ids: Vec<String> },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid predicate: {0}")]
    Predicate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown station `{0}`")]
    UnknownStation(String),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("unknown value `{value}` for dimension `{dim}`")]
    UnknownValue { dim: String, value: String },

    #[error("no {0} level in hierarchy")]
    Hierarchy(&'static str),

    #[error("unknown object type `{0}`")]
    UnknownObjectType(String),

    #[error("model accepts no trace")]
    EmptyLanguage,

    #[error("empty sample set")]
    EmptySamples,

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("series too short: {len} values, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("missing variable `{0}`")]
    MissingVariable(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code used by the command line for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
