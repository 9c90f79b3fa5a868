use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands cannot be combined because their dimensions disagree.
    #[error("shape mismatch between {left} ({left_shape:?}) and {right} ({right_shape:?})")]
    Shape {
        left: &'static str,
        left_shape: (usize, usize),
        right: &'static str,
        right_shape: (usize, usize),
    },

    #[error("entry ({row}, {col}) = {value} is not a finite nonnegative number")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("group block row {row} is not a one-hot indicator")]
    Indicator { row: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("objective became non-finite at iteration {iteration}")]
    NumericFailure { iteration: usize },

    #[error("cannot normalize: {kind} {index} has zero mass")]
    Normalization { kind: &'static str, index: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}
