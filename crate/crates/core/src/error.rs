use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("span {start}..{end} is out of bounds for document `{doc_id}` ({len} tokens)")]
    SpanOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("span surface mismatch in document `{doc_id}` ({context}): expected {expected:?}, found {found:?}")]
    SurfaceMismatch {
        doc_id: String,
        context: String,
        expected: String,
        found: String,
    },

    #[error("document mismatch: expected `{expected}`, found `{found}`")]
    DocumentMismatch { expected: String, found: String },

    #[error("invalid document `{doc_id}`: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("invalid annotation set for `{doc_id}` by `{annotator_id}`: {reason}")]
    InvalidAnnotationSet {
        doc_id: String,
        annotator_id: String,
        reason: String,
    },

    #[error("document `{doc_id}` has {found} annotation sets; adjudication needs at least 2")]
    TooFewAnnotators { doc_id: String, found: usize },

    #[error("annotator `{annotator_id}` submitted more than one set for `{doc_id}`")]
    DuplicateAnnotator { doc_id: String, annotator_id: String },

    #[error("unknown error category `{0}`")]
    UnknownCategory(String),

    #[error("no document with id `{0}`")]
    MissingDocument(String),

    #[error("fleiss kappa needs at least 2 raters per item, got {0}")]
    TooFewRaters(usize),

    #[error("clusters disagree on annotator count: {0} vs {1}")]
    InconsistentRaters(usize, usize),

    #[error("no items to compute agreement over")]
    NoItems,

    #[error("reference annotation for `{0}` has no errors")]
    EmptyReference(String),

    #[error("strict mode: {0}")]
    Strict(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SpanOutOfBounds { .. } => "span_out_of_bounds",
            Error::SurfaceMismatch { .. } => "surface_mismatch",
            Error::DocumentMismatch { .. } => "document_mismatch",
            Error::InvalidDocument { .. } => "invalid_document",
            Error::InvalidAnnotationSet { .. } => "invalid_annotation_set",
            Error::TooFewAnnotators { .. } => "too_few_annotators",
            Error::DuplicateAnnotator { .. } => "duplicate_annotator",
            Error::UnknownCategory(_) => "unknown_category",
            Error::MissingDocument(_) => "missing_document",
            Error::TooFewRaters(_) => "too_few_raters",
            Error::InconsistentRaters(..) => "inconsistent_raters",
            Error::NoItems => "no_items",
            Error::EmptyReference(_) => "empty_reference",
            Error::Strict(_) => "strict",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
        }
    }

    /// True for errors caused by bad input data rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}
