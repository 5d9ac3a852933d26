use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can surface.
///
/// Each variant maps to a module-qualified diagnostic code through
/// [`Error::code`], which is what the command line prints.
#[derive(Debug, Error)]
pub enum Error {
    #[error("box has no non-degenerate dimension to split")]
    CannotSplit,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("action index {index} out of range for {count} actions")]
    BadActionIndex { index: usize, count: usize },
    #[error("precision must be positive and finite, got {0}")]
    BadPrecision(f64),
    #[error("probability {0} outside the admissible range")]
    BadProbability(f64),
    #[error("distribution sums to {0}, expected 1")]
    BadDistribution(f64),
    #[error("state {0} is a failure state and cannot have choices")]
    ChoiceOnFailState(usize),
    #[error("unknown state id {0}")]
    UnknownState(usize),
    #[error("model is not layered: {0}")]
    NotLayered(String),
    #[error("no initial states")]
    NoInitialStates,
    #[error("query region is not covered by the analysed regions")]
    Uncovered,
    #[error("bad histogram bins: {0}")]
    BadBins(String),
    #[error("state limit of {limit} exceeded while building the abstraction")]
    MemoryGuard { limit: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn dims(expected: usize, got: usize) -> Self {
        Error::DimMismatch { expected, got }
    }

    /// Module-qualified diagnostic code, e.g. `faults::BadProbability`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::CannotSplit => "geometry::CannotSplit",
            Error::DimMismatch { .. } => "geometry::DimMismatch",
            Error::BadInterval { .. } => "geometry::BadInterval",
            Error::ParseError(_) => "network::ParseError",
            Error::ShapeMismatch(_) => "network::ShapeMismatch",
            Error::BadActionIndex { .. } => "network::BadActionIndex",
            Error::BadPrecision(_) => "extraction::BadPrecision",
            Error::BadProbability(_) => "faults::BadProbability",
            Error::BadDistribution(_) => "mdp::BadDistribution",
            Error::ChoiceOnFailState(_) => "mdp::ChoiceOnFailState",
            Error::UnknownState(_) => "mdp::UnknownState",
            Error::NotLayered(_) => "model_check::NotLayered",
            Error::NoInitialStates => "abstraction::NoInitialStates",
            Error::Uncovered => "results::Uncovered",
            Error::BadBins(_) => "results::BadBins",
            Error::MemoryGuard { .. } => "abstraction::MemoryGuard",
            Error::Config(_) => "cli::Config",
            Error::Io(_) => "cli::Io",
        }
    }
}
