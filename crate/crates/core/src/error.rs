use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum DppError {
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("numerically singular pivot {pivot:e} (selection position {position})")]
    SingularPivot { position: usize, pivot: f64 },

    #[error("row {row} is stale: {filled} of {selected} selection columns filled")]
    StaleRow {
        row: usize,
        filled: usize,
        selected: usize,
    },

    #[error("row {0} is already part of the selection")]
    AlreadySelected(usize),

    #[error("priority queue has no live entries")]
    EmptyQueue,

    #[error("matrix is not symmetric: |a[{i},{j}] - a[{j},{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },

    #[error("kernel numerically singular: {0}")]
    Singular(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("enumeration guard: n = {n} exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error("no items survive filtering")]
    NoItems,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DppError> = std::result::Result<T, E>;
