use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{path} holds results of config {found}, not {expected}; pass --force to overwrite")]
    Overwrite {
        path: String,
        found: String,
        expected: String,
    },

    #[error(transparent)]
    Kgsa(#[from] kgsa::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for a degenerate output, 3 for a violated estimator assumption,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        let mut e = match self {
            CliError::Kgsa(e) => e,
            _ => return 1,
        };
        while let kgsa::Error::GramEntry { source, .. } = e {
            e = source;
        }
        match e {
            kgsa::Error::DegenerateOutput(_) => 2,
            kgsa::Error::AssumptionViolated(_) => 3,
            _ => 1,
        }
    }
}
