use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] greensr::Error),
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unsupported schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        use greensr::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Parse { .. } => "parse",
                E::Infeasible { .. } | E::LinkOverload { .. } => "infeasible",
                E::TimeLimit => "time-limit",
                E::TooLarge(_) => "too-large",
                E::Io(_) => "io",
                _ => "invalid-input",
            },
            CliError::Read { .. } | CliError::Write { .. } => "io",
            CliError::Json { .. } | CliError::Csv(_) => "parse",
            CliError::Schema { .. } => "schema",
            CliError::Config(_) => "config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(greensr::Error::Infeasible { .. } | greensr::Error::LinkOverload { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

/// JSON object written to stderr on failure.
pub fn error_json(kind: &str, message: String) -> String {
    serde_json::to_string(&ErrorDoc {
        error: ErrorBody { kind, message },
    })
    .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{kind}\"}}}}"))
}

pub type CliResult<T> = Result<T, CliError>;
