use medzisc::Error;

pub const INVALID_INPUT: u8 = 2;
pub const RUNTIME: u8 = 1;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: INVALID_INPUT,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: RUNTIME,
            error: error.into(),
        }
    }

    /// Anything that goes wrong while reading inputs is the caller's fault.
    pub fn loading(error: Error) -> Self {
        Self::invalid(error)
    }

    pub fn classify(error: Error) -> Self {
        if error.is_invalid_input() {
            Self::invalid(error)
        } else {
            Self::runtime(error)
        }
    }
}
