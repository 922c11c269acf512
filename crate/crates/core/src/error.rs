use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Nn(#[from] scmap_nn::NnError),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("wire format error: {0}")]
    Wire(String),

    #[error("codebook mismatch: sender {sender}, receiver {receiver}")]
    CodebookMismatch { sender: String, receiver: String },

    #[error("transport closed unexpectedly")]
    TransportClosed,

    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },

    #[error("missing dataset file: {0}")]
    MissingFile(String),

    #[error("insufficient overlap: {pairs} associated pose pairs, need at least 3")]
    InsufficientOverlap { pairs: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
