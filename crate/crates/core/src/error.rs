use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A row or line could not be decoded.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A decoded record violates a record invariant.
    #[error("line {line}: invalid record: {message}")]
    InvalidRecord { line: usize, message: String },

    /// Input violates a precondition of the requested operation.
    #[error("invalid input: {0}")]
    Validation(String),

    /// An item identifier is not part of the model.
    #[error("unknown item `{0}`")]
    UnknownItem(String),

    /// The comparison graph has more than one component, so the scale is not identifiable.
    #[error("comparison design is disconnected ({} components)", components.len())]
    Disconnected { components: Vec<Vec<String>> },

    /// Every redraw of one bootstrap replicate gave a disconnected design.
    #[error("bootstrap replicate {replicate} stayed disconnected after {attempts} redraws")]
    DisconnectedResample { replicate: usize, attempts: usize },

    /// The optimizer stopped before reaching the gradient tolerance.
    #[error("scaling did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },

    /// Rank correlation of one scene failed.
    #[error("scene {index}: {source}")]
    Scene {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for input-shaped errors (decoding and validation), false for
    /// statistical or identifiability failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidRecord { .. }
                | Error::Validation(_)
                | Error::UnknownItem(_)
                | Error::Io(_)
        )
    }

    /// True for errors caused by the statistics of the data rather than its shape.
    pub fn is_statistical_error(&self) -> bool {
        match self {
            Error::Disconnected { .. } | Error::DisconnectedResample { .. } | Error::NotConverged { .. } => true,
            Error::Scene { source, .. } => source.is_statistical_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
