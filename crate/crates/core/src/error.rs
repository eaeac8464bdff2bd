use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "corpus files are not aligned: source has {source_lines} lines, target has {target_lines}"
    )]
    Alignment {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("line {line}: expected `source<TAB>target`")]
    MalformedPair { line: usize },

    #[error("corpus is empty after filtering")]
    EmptyCorpus,

    #[error("token `{token}` has no positive frequency")]
    InvalidFrequency { token: String },

    #[error("score at index {index} is not finite ({value})")]
    InvalidScore { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample {sample_id} costs {cost} tokens but the batch budget is {budget}")]
    Budget {
        sample_id: usize,
        cost: u32,
        budget: u32,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("trainer failed at step {step}")]
    Trainer {
        step: u64,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
