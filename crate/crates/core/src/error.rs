use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rate {rate} does not exceed the conditional entropy {entropy}; no positive root")]
    RateBelowEntropy { rate: f64, entropy: f64 },

    #[error("tree code is in {actual} mode, {expected} mode required")]
    WrongMode {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("instance too large for exhaustive search: {size} leaves exceeds {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("insufficient data for fit: {found} usable points, {required} required")]
    InsufficientData { found: usize, required: usize },
}
