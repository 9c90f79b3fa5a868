use gbrnmf_core::Error;

pub const VERIFY_FAILED: u8 = 1;
pub const USAGE: u8 = 2;
pub const NUMERIC: u8 = 3;

/// A message paired with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn verify(message: impl Into<String>) -> Self {
        Self { code: VERIFY_FAILED, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericFailure { .. } => NUMERIC,
            _ => USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(format!("json: {e}"))
    }
}
