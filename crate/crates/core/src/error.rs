use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Upper surface touches or crosses the lower surface.
    #[error("degenerate geometry: upper surface crosses lower surface at x = {x:.6}")]
    DegenerateGeometry { x: f64 },

    #[error("surface point ({x:.6}, {y:.6}) lies outside the FFD box")]
    OutsideLattice { x: f64, y: f64 },

    #[error("Reynolds number {0:e} outside [1e6, 1e7]")]
    ReynoldsOutOfRange(f64),

    #[error("non-finite response in sample {sample}: {what}")]
    NonFiniteResponse { sample: usize, what: String },

    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },

    #[error("iteration {iteration}: geometry still degenerate after {retries} pull-backs")]
    RetriesExhausted { iteration: usize, retries: usize },

    #[error("iteration {iteration}: {source}")]
    Aborted {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
