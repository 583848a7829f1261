use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for usage errors: unknown flags, bad flag values or combinations.
pub const EXIT_USAGE: i32 = 1;
/// Exit code for data errors: unreadable or malformed input, failed fits.
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] spcalda::Error),
}

impl CliError {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}
