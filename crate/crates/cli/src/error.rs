use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("proposal not found: {0}")]
    NotFound(String),

    #[error("review store {path}: {reason}")]
    Store { path: String, reason: String },

    #[error(transparent)]
    Forge(#[from] logicclip_forge::ForgeError),

    #[error(transparent)]
    Core(#[from] logicclip_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
