use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "explicit projection needs {pixels}^2 = {columns} columns; images above {cap} pixels \
         must use the convolutional path"
    )]
    SizeCap { pixels: usize, columns: usize, cap: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("bad file format: {0}")]
    Format(String),

    #[error("cannot decode image {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
