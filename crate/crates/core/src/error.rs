use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: label {label:?} is not one of the declared classes {classes:?}")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        label: String,
        classes: Vec<String>,
    },

    #[error("dataset {dataset:?}: split {split} is empty")]
    EmptySplit { dataset: String, split: String },

    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("dataset {dataset:?}: {reason}")]
    InvalidDataset { dataset: String, reason: String },

    #[error("remap_age: missing original age classes {missing:?}")]
    MissingAgeClasses { missing: Vec<String> },

    #[error("styles {0:?} appear in both the source and target split")]
    OverlappingStyles(Vec<String>),

    #[error("unknown style {0:?}")]
    UnknownStyle(String),

    #[error("target style {target:?} example {id:?} shares its text with source style {source_style:?}")]
    SharedExample {
        target: String,
        id: String,
        source_style: String,
    },

    #[error("invalid lexicon {style:?}: {reason}")]
    InvalidLexicon { style: String, reason: String },

    #[error("lexicon {style:?} has no class {class:?}")]
    UnknownClass { style: String, class: String },

    #[error("no lexicon loaded for style {0:?}")]
    MissingLexicon(String),

    #[error("no elicitation prompts for ({style}, {class}); known pairs: {known}")]
    UnknownElicitation {
        style: String,
        class: String,
        known: String,
    },

    #[error("{classes} classes exceed the randomization vocabulary of {vocab}")]
    VocabTooSmall { classes: usize, vocab: usize },

    #[error("cannot render prompt: {0}")]
    Render(String),

    #[error("unknown {kind} {value:?}")]
    Parse { kind: &'static str, value: String },

    #[error("scorer failed for prompt {prompt_id}: {reason}")]
    Scorer { prompt_id: String, reason: String },

    #[error("score contract violated: {0}")]
    Contract(String),

    #[error("non-finite score {value} for candidate {candidate:?}")]
    NonFiniteScore { candidate: String, value: f64 },

    #[error("requested {requested} demonstrations but the train split only has {available}")]
    NotEnoughExamples { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {0:?} is outside the declared class set")]
    LabelOutsideClasses(String),

    #[error("cannot aggregate runs with different config fingerprints ({0} vs {1})")]
    FingerprintMismatch(String, String),

    #[error("ablation aborted: {failed} of {total} cells failed (first: {reason})")]
    AblationAborted {
        failed: usize,
        total: usize,
        reason: String,
        partial: Box<crate::eval::GridTable>,
    },

    #[error("mock server: {0}")]
    Server(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
