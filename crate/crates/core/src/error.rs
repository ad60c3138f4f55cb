use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown logical category {0:?}")]
    UnknownCategory(String),

    #[error("rule table line {line}: {reason}")]
    RuleTable { line: usize, reason: String },

    #[error("template inapplicable: {0}")]
    TemplateInapplicable(String),

    #[error("unknown slot {0:?}")]
    UnknownSlot(String),

    #[error("corpus format: {0}")]
    Format(String),

    #[error("empty caption")]
    EmptyCaption,

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid batch: {0}")]
    InvalidBatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("non-finite loss at step {step}: {diagnostics}")]
    NonFinite { step: usize, diagnostics: String },

    #[error("k = {k} exceeds pool size {pool}")]
    KTooLarge { k: usize, pool: usize },

    #[error("cluster battery: {0}")]
    Battery(String),

    #[error("checkpoint not found: {}", .0.display())]
    CheckpointNotFound(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
