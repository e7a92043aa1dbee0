use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Core(eulerpoisson::Error),
    Usage(String),
    /// A verification ran but did not pass.
    Check(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<eulerpoisson::Error> for CliError {
    fn from(e: eulerpoisson::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Check(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    /// 2 for invalid input, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if !e.is_validation() => 3,
            CliError::Check(_) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Check(_) => "check_failed",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorReport { kind: self.kind(), message: self.to_string(), exit_code: self.exit_code() })
            .unwrap_or_else(|_| "{\"kind\":\"internal\"}".into())
    }
}
