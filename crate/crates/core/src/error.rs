use thiserror::Error;

/// Errors raised by signal construction and the moment/bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("nodes coincide or are not distinct")]
    DegenerateNodes,
    #[error("amplitude {index} is zero")]
    ZeroAmplitude { index: usize },
    #[error("signal violates the unit box |x| <= 1, |a| <= 1")]
    NotNormalized,
    #[error("scale factor {0} is outside (0, 1]")]
    BadScale(f64),
    #[error("noise level {0} is negative")]
    BadNoise(f64),
    #[error("zeroth moment vanishes")]
    ZeroMass,
    #[error("no real solution: {0}")]
    NoRealSolution(String),
    #[error("lambda must be nonzero")]
    BadLambda,
    #[error("invalid regularity parameters: {0}")]
    InvalidParams(String),
    #[error("size {0} exceeds the supported maximum of {max}", max = crate::MAX_SIZE)]
    TooLarge(usize),
    #[error("non-finite input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, Error>;
