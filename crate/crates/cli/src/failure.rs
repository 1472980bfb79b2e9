use std::fmt;
use std::path::Path;

use lpinv_core::Error;
use lpinv_projector::ProjectorError;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_MISSING_FILE: u8 = 4;
pub const EXIT_IO: u8 = 5;

/// A failed command: message plus process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn from_io(path: &Path, e: std::io::Error) -> Self {
        let code = if e.kind() == std::io::ErrorKind::NotFound { EXIT_MISSING_FILE } else { EXIT_IO };
        Self::new(code, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::MissingWeights(_) => EXIT_MISSING_FILE,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_FILE,
        Error::Io { .. } => EXIT_IO,
        Error::Projector(ProjectorError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => {
            EXIT_MISSING_FILE
        }
        Error::Projector(ProjectorError::Io { .. }) => EXIT_IO,
        Error::InvalidParameter(_) | Error::DimensionMismatch(_) => EXIT_CONFIG,
        Error::Sample { source, .. } => code_of(source),
        _ => EXIT_OTHER,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(code_of(&e), e.to_string())
    }
}

impl From<ProjectorError> for Failure {
    fn from(e: ProjectorError) -> Self {
        Error::from(e).into()
    }
}
