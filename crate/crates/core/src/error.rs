use thiserror::Error;

/// Errors raised by the model, simulation and fitting layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of a formula (non-positive temperature, bad slot, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario or parameter block violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Visibility is 0/0 when both the correlated and accidental rates vanish.
    #[error("visibility undefined: correlated and accidental rates are both zero")]
    UndefinedVisibility,

    /// No correlated-pair number reproduces the requested visibility.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// The fringe fit normal equations are singular.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
