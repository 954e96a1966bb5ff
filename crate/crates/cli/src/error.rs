use std::fmt;

/// Runner error split by exit code: configuration problems exit 2, runtime
/// failures exit 3.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Runtime(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Runtime(_) => 3,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        AppError::Config(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        AppError::Runtime(msg.to_string())
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
