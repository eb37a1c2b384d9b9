use thiserror::Error;

/// Crate-wide error type.
///
/// Scalar values are carried as display strings so the enum stays
/// independent of the arithmetic mode.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("spectrum must contain at least one level")]
    EmptySpectrum,

    #[error("energy at input index {index} is not finite")]
    NonFiniteEnergy { index: usize },

    #[error("expected {expected} probabilities, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("probability at level {index} is negative ({value})")]
    NegativeProbability { index: usize, value: String },

    #[error("probability at level {index} is not finite")]
    NonFiniteProbability { index: usize },

    #[error("state mass {total} is not 1 within tolerance")]
    NotPhysical { total: String },

    #[error("inverse temperature must be positive; ln(r) requires r > 1")]
    NonPositiveBeta,

    #[error("reference degeneracy must be positive, got {value}")]
    NonPositiveDegeneracy { value: String },

    #[error("operands are defined on different spectra")]
    SpectrumMismatch,

    #[error("operands carry different inverse temperatures")]
    BetaMismatch,

    #[error("state has empty support")]
    EmptySupport,

    #[error("epsilon {value} outside [0, mass)")]
    EpsilonOutOfRange { value: String },

    #[error("delta {value} outside [0, 1)")]
    DeltaOutOfRange { value: String },

    #[error("work factor must be positive and finite, got {value}")]
    NonPositiveWorkFactor { value: String },

    #[error("source currents {rows} and destination capacity {cols} do not balance")]
    InfeasibleTotals { rows: String, cols: String },

    #[error("degeneracy target {value} is not an integer; rescale the reference degeneracy")]
    NonIntegralTarget { value: String },

    #[error("current matrix does not match the state it is applied to")]
    MarginalMismatch,

    #[error("instance has {levels} levels, oracle limit is {max}")]
    LevelLimitExceeded { levels: usize, max: usize },

    #[error("instance needs {needed} microstates, oracle limit is {max}")]
    MicrostateLimitExceeded { needed: String, max: u64 },

    #[error("cannot parse {input:?} as {expected}")]
    Parse { input: String, expected: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
