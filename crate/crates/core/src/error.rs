use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: truncated or oversized file, expected {expected} bytes but found {actual}")]
    Truncated { path: PathBuf, expected: u64, actual: u64 },

    #[error("video {video_id}: missing artifact file {path}")]
    MissingArtifact { video_id: String, path: PathBuf },

    #[error("duplicate video id {0}")]
    DuplicateVideoId(String),

    #[error("unknown video id {0}")]
    UnknownVideo(String),

    #[error("unknown app id {0}")]
    UnknownApp(String),

    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("video {video_id}: embedding dimension {actual} differs from dataset dimension {expected}")]
    DatasetDimension {
        video_id: String,
        expected: usize,
        actual: usize,
    },

    #[error("invalid artifact: {0}")]
    InvalidArtifact(String),

    #[error("stride {requested} is not a multiple of the stored stride {stored}")]
    Stride { stored: u32, requested: u32 },

    #[error("k-means needs at least {k} points, got {points}")]
    TooFewPoints { points: usize, k: usize },

    #[error("non-finite value in input vector {index}")]
    NonFinite { index: usize },

    #[error("{0}")]
    InvalidConfig(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty task set")]
    EmptyTaskSet,

    #[error("app {app_id}: {message}")]
    TaskGeneration { app_id: String, message: String },

    #[error("mode {mode} requires the {component} score")]
    MissingComponent {
        mode: &'static str,
        component: &'static str,
    },

    #[error("scoring query {query} against {candidate} failed: {source}")]
    Scoring {
        query: String,
        candidate: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad inputs (manifest, artifacts, config)
    /// rather than by a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Scoring { source, .. } => source.is_validation(),
            Error::Json { .. }
            | Error::Format { .. }
            | Error::Truncated { .. }
            | Error::MissingArtifact { .. }
            | Error::DuplicateVideoId(_)
            | Error::UnknownVideo(_)
            | Error::UnknownApp(_)
            | Error::DimensionMismatch { .. }
            | Error::DatasetDimension { .. }
            | Error::InvalidArtifact(_)
            | Error::Stride { .. }
            | Error::TooFewPoints { .. }
            | Error::NonFinite { .. }
            | Error::InvalidConfig(_)
            | Error::EmptyCorpus
            | Error::EmptyTaskSet
            | Error::TaskGeneration { .. }
            | Error::MissingComponent { .. } => true,
        }
    }
}
