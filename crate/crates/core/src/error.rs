use alloc::string::String;
use alloc::vec::Vec;

/// Errors surfaced by the estimation and forecasting pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("vector length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("lag order {lag} must be smaller than the series length {n}")]
    LagTooLarge { lag: usize, n: usize },

    #[error("column {name:?} is constant and cannot be standardized")]
    ConstantColumn { name: String },

    #[error("series has a missing value at position {index} with no neighbor to interpolate from")]
    GapAtBoundary { index: usize },

    #[error("log(-y+1) transform requires y <= 0; positive values at indices {indices:?}")]
    PositiveUnderLogNeg { indices: Vec<usize> },

    #[error("AR coefficients are non-stationary (root modulus {modulus} inside the unit circle)")]
    NonStationary { modulus: f64 },

    #[error("estimated error-lag coefficients are non-stationary; reduce q or tighten the spike prior")]
    NonStationaryEstimate,

    #[error("quadratic form x'Mx = {value} is too close to zero")]
    DegenerateDenominator { value: f64 },

    #[error("non-positive logarithm argument {value} in posterior weight; shrinkage matrix is not PSD")]
    NegativeLogArgument { value: f64 },

    #[error("matrix is not symmetric: max |M - M'| = {deviation}")]
    Asymmetric { deviation: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("exact enumeration is limited to p <= 12 columns, got {p}")]
    EnumerationTooLarge { p: usize },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("forecast needs {needed} future covariate rows, got {got}")]
    MissingCovariateRows { needed: usize, got: usize },

    #[error("window too small: initial window {window} plus horizon {h} exceeds series length {n}")]
    WindowTooSmall { window: usize, h: usize, n: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
