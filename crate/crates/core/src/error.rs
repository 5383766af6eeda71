use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Run entries do not cover a debate's line numbers exactly once.
    #[error("coverage error for debate {debate}: {msg}")]
    Coverage { debate: String, msg: String },

    /// A precondition of an operation was violated by its inputs.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Binary file with a bad header, version or length.
    #[error("format error: {0}")]
    Format(String),

    #[error("missing keys in vector store: {}", .0.join(", "))]
    MissingKey(Vec<String>),

    #[error("embedding service error after {retries} retries: {msg}")]
    Transport { msg: String, retries: u32 },

    #[error("no POS annotation for {debate_id} line {line_number}")]
    MissingAnnotation { debate_id: String, line_number: u32 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for this error: 2 for configuration problems, 4 for
    /// the embedding service, 3 for everything data- or contract-related.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Transport { .. } => 4,
            _ => 3,
        }
    }
}
