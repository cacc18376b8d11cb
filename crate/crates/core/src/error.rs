use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("user id {0} is not registered")]
    UnknownUserId(u32),

    #[error("item id {0} is not registered")]
    UnknownItemId(u32),

    #[error("edge ({user}, {item}) does not exist")]
    MissingEdge { user: String, item: String },

    #[error("item count {items} exceeds the dense size cap {cap}")]
    SizeCap { items: usize, cap: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph inconsistency: {0}")]
    InconsistentGraph(String),

    #[error("snapshot version mismatch: found {found}, expected {expected}")]
    SnapshotVersion { found: u32, expected: u32 },

    #[error("snapshot corrupt: {0}")]
    SnapshotCorrupt(String),

    #[error("snapshot was produced under a different configuration")]
    SnapshotConfigMismatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
