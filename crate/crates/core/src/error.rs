//! Error types shared across the pipeline stages.

use thiserror::Error;

/// Errors raised while generating base time-series processes.
#[derive(Debug, Error)]
pub enum GenerateError {
    /// Autoregressive-style processes require `|phi| < 1`.
    #[error("non-stationary parameter: |phi| = {phi} must be < 1")]
    NonStationaryParameter { phi: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}

/// Errors raised while building masks, injecting labels or normalizing.
#[derive(Debug, Error)]
pub enum InjectionError {
    /// The requested mask size class cannot fit in the given shape.
    #[error("mask infeasible: {0}")]
    MaskInfeasible(String),
    /// Injection constant must be positive to separate the classes.
    #[error("degenerate separation: injection constant {constant} must be > 0")]
    DegenerateSeparation { constant: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("normalization requires a nonempty train split")]
    EmptyTrainSplit,
}

/// Errors raised by catalog assembly and dataset persistence.
#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("format error in {path}: {message}")]
    FormatError { path: String, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Injection(#[from] InjectionError),
}

/// Errors raised by model construction, training and inference.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    /// Training demands both classes in the train split.
    #[error("degenerate labels: train split contains a single class")]
    DegenerateLabels,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty selection: {0}")]
    EmptySelection(String),
    #[error("format error in {path}: {message}")]
    FormatError { path: String, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised by explainers and attribution ingestion.
#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Surrogate fitting needs at least as many samples as segments.
    #[error("ill-posed surrogate: {n_samples} samples for {n_segments} segments")]
    IllPosedSurrogate { n_samples: usize, n_segments: usize },
    #[error("format error in {path}: {message}")]
    FormatError { path: String, message: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Errors raised by the metric computations.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Zero variance on either side of the faithfulness correlation.
    #[error("degenerate correlation: {0}")]
    DegenerateCorrelation(String),
    /// All-zero attribution has no contribution distribution.
    #[error("degenerate attribution: all scores are zero")]
    DegenerateAttribution,
    #[error("mask infeasible: {0}")]
    MaskInfeasible(String),
    /// An explainer failed while probing a perturbed input.
    #[error("explainer failed on perturbation sample {sample}: {source}")]
    ExplainFailure {
        sample: usize,
        #[source]
        source: Box<ExplainError>,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Errors raised by the benchmark harness and report emission.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Nothing to evaluate: empty filter result or no model passed the gate.
    #[error("empty selection: {0}")]
    EmptySelection(String),
    /// The request needs a capability (model, masks) that is unavailable.
    #[error("missing capability: {0}")]
    MissingCapability(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl CatalogError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CatalogError::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        CatalogError::FormatError { path: path.into(), message: message.into() }
    }
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}
