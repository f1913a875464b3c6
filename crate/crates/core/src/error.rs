use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} bin loads, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("bin index {index} out of range for {bins} bins")]
    BinOutOfRange { index: usize, bins: usize },
    #[error("item size {size} outside 1..={max}")]
    ItemOutOfRange { size: u32, max: u32 },
    #[error("item of size {0} is not present")]
    MissingItem(u32),
    #[error("inconsistent configuration: {0}")]
    Inconsistent(String),
    #[error("strategy structure: {0}")]
    Structure(String),
}
