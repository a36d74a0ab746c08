use adinfer::InferenceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("case {case}: CTP and AD disease posteriors differ by {difference:e}")]
    PosteriorMismatch { case: usize, difference: f64 },
    #[error("case {case}: {source}")]
    Case {
        case: usize,
        #[source]
        source: InferenceError,
    },
    #[error(transparent)]
    Inference(#[from] InferenceError),
}
