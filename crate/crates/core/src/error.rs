use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("configuration does not fit a box with {sites} sites")]
    SizeMismatch { sites: usize },

    #[error("configurations do not communicate by a single move")]
    NotNeighbors,

    #[error("state space has {states} states (3^{sites}), above the enumeration limit {limit}")]
    TooLarge { sites: usize, states: u128, limit: u128 },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("degenerate landscape: {0}")]
    Degenerate(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("need at least {needed} complete records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("srw problem: {0}")]
    Srw(String),
}

pub type Result<T> = std::result::Result<T, Error>;
