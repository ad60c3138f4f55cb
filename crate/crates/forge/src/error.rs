use logicclip_core::LogicalCategory;
use thiserror::Error;

/// Why a backend response could not be turned into a caption list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    /// Only 3 (captions) or 5 (medicine options) are ever requested.
    UnsupportedCount(usize),
    Missing(usize),
    Duplicate(usize),
    OutOfOrder { expected: usize, found: usize },
    Extra(usize),
    EmptyCaption(usize),
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseFailure::UnsupportedCount(n) => write!(f, "expected count {n} is not 3 or 5"),
            ParseFailure::Missing(n) => write!(f, "item {n} missing"),
            ParseFailure::Duplicate(n) => write!(f, "item {n} numbered twice"),
            ParseFailure::OutOfOrder { expected, found } => write!(f, "expected item {expected}, found {found}"),
            ParseFailure::Extra(n) => write!(f, "unexpected item {n}"),
            ParseFailure::EmptyCaption(n) => write!(f, "item {n} is empty"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("no value for placeholder {{{0}}}")]
    MissingPlaceholder(String),

    /// Carries the raw response so it can be queued for retry or inspection.
    #[error("unparseable response ({failure})")]
    Parse { failure: ParseFailure, raw: String },

    #[error("{category}: no perturbable site in {caption:?} (found {found} of {needed})")]
    NoOp { category: LogicalCategory, caption: String, found: usize, needed: usize },

    #[error("{category} not detected in {caption:?}")]
    CategoryNotDetected { category: LogicalCategory, caption: String },

    #[error("response rejected: {0}")]
    Invalid(String),

    #[error("backend {backend}: {reason}")]
    Backend { backend: String, reason: String },

    #[error("proposal {id} is {status}, only pending proposals can be decided")]
    Conflict { id: String, status: String },

    #[error("bad decision: {0}")]
    Decision(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] logicclip_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;
