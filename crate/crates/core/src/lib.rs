//! Single-shot work extraction from diagonal states against a heat bath.
//!
//! The crate models a finite-level system in contact with an idealized
//! bath whose degeneracy decays exponentially with extracted energy, and
//! computes how much work a process that succeeds with probability at
//! least `1 - epsilon` can deposit into a two-level weight. Everything is
//! generic over an arithmetic [`arith::Mode`]: [`arith::Exact`] keeps all
//! quantities as big rationals (energies integral, `beta` a rational
//! logarithm) so identities hold bit-for-bit, while [`arith::Float`] runs
//! in `f64` for arbitrary spectra.

#![forbid(unsafe_code)]

pub mod arith;
pub mod divergence;
pub mod error;
pub mod majorization;
pub mod oracle;
pub mod process;
pub mod system;

pub use arith::{Exact, Float, LnRatio, Mode, Scalar};
pub use error::{Error, Result};
pub use majorization::{
    beta_order, majorization_curve, thermo_majorizes, BetaOrdering, MajorizationCurve,
};
pub use oracle::{FiniteModel, OracleLimits, OracleOutcome};
pub use process::{
    ForwardOutcome, ReverseProbability, TransitionCurrentMatrix, Work, WorkDistribution,
};
pub use system::{BathModel, DiagonalState, EnergySpectrum, ThermalContext};
