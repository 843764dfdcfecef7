use thiserror::Error;

/// Errors produced by the coalition formation engine and its backends.
#[derive(Debug, Error)]
pub enum Error {
    #[error("player {player} out of range for {n} players")]
    UnknownPlayer { player: usize, n: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("structures are over different player sets ({left} vs {right} players)")]
    PlayerSetMismatch { left: usize, right: usize },

    #[error("enumerating partitions of {n} players exceeds cap {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("utility vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("utility for player {player} is not finite")]
    NonFiniteUtility { player: usize },

    #[error("deviating player {player} must not be a member of the destination coalition")]
    DeviatorInDestination { player: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("own channel vector is zero")]
    ZeroChannel,

    #[error("coalition of size {size} exceeds {antennas} transmit antennas")]
    CoalitionTooLarge { size: usize, antennas: usize },

    #[error("formation exceeded {limit} accepted steps (invariant violation)")]
    StepLimit { limit: u64 },

    #[error("utility oracle failed: {0}")]
    Oracle(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("cannot parse coalition structure '{text}': {message}")]
    ParseStructure { text: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
