use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ProjectorError>;

#[derive(Debug, Error)]
pub enum ProjectorError {
    #[error("not a projector weight file: bad magic bytes, expected \"LPW1\"")]
    BadMagic,

    #[error("unsupported weight file version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed weight file header: {0}")]
    Header(String),

    #[error("tensor {tensor}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("weight file ends inside tensor {tensor}")]
    TruncatedFile { tensor: String },

    #[error("weight file lacks tensor {0}")]
    MissingTensor(String),

    #[error("weight file has unexpected tensor {0}")]
    UnexpectedTensor(String),

    #[error("tensor {tensor}: {reason}")]
    InvalidValue { tensor: String, reason: String },

    #[error("input of shape {found:?} does not fit the network: {reason}")]
    InputShapeMismatch { found: (usize, usize), reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
