use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("zero constraint gradient")]
    ZeroGradient,

    #[error("object placement failed after {attempts} rejection attempts (arena too crowded)")]
    PlacementFailed { attempts: u32 },

    #[error("batch contains no trajectories")]
    EmptyBatch,

    #[error("no completed episodes and no bootstrap available")]
    NoEpisodes,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown algorithm '{0}'")]
    UnknownAlgorithm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
