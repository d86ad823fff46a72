use std::fmt;
use std::path::PathBuf;

/// Errors produced anywhere in the transmission pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("y4m parse error: {0}")]
    Parse(String),

    #[error("truncated frame payload in frame {frame}: expected {expected} bytes, got {actual}")]
    TruncatedPayload {
        frame: usize,
        expected: usize,
        actual: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("chunk {index} has zero transformed variance and cannot be allocated power")]
    DegenerateChunk { index: usize },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Pipeline stage, used to tag errors surfacing from `run_pipeline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Transform,
    Chunking,
    Allocation,
    Channel,
    Decode,
    Metrics,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Load => "load",
            Stage::Transform => "transform",
            Stage::Chunking => "chunking",
            Stage::Allocation => "allocation",
            Stage::Channel => "channel",
            Stage::Decode => "decode",
            Stage::Metrics => "metrics",
            Stage::Report => "report",
        };
        f.write_str(name)
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
