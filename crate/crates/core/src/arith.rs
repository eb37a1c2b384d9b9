//! Arithmetic modes.
//!
//! Every quantity in this crate is generic over a [`Mode`], which fixes
//! three representations at once: the scalar field used for probabilities
//! and Boltzmann weights, the energy type, and the inverse temperature.
//!
//! [`Exact`] works in arbitrary-precision rationals. It requires
//! `beta = ln(p/q)` with `p/q > 1` and integer energies, so that every
//! Boltzmann weight `e^(-beta*E) = (q/p)^E` is itself rational and
//! identities can be checked by rational equality. [`Float`] works in
//! binary64 with an absolute tolerance of `1e-12` and places no
//! restriction on `beta` or the energies.
//!
//! Log-domain quantities (work values, divergences) are carried in the
//! multiplicative domain as Boltzmann factors, which keeps them inside
//! the scalar field in exact mode; see [`crate::process::Work`].

use std::cmp::Ordering;
use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Absolute comparison tolerance used by [`Float`] mode.
pub const FLOAT_TOL: f64 = 1e-12;

/// Field operations shared by both arithmetic modes.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Sum<Self>
{
    /// True when equality comparisons are exact rather than tolerance-based.
    const EXACT: bool;

    fn from_int(n: i64) -> Self;

    /// `num/den`; `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Nearest binary64 value, for display and log-domain conversion.
    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    /// Multiplicative inverse; the value must be nonzero.
    fn recip(&self) -> Self;

    /// Comparison tolerance: zero in exact mode, [`FLOAT_TOL`] in float mode.
    fn tol() -> Self;

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tol()
    }

    /// `self <= other` within tolerance.
    fn approx_le(&self, other: &Self) -> bool {
        self.clone() - other.clone() <= Self::tol()
    }

    /// True when the value is a whole number. Always true in float mode:
    /// integrality of degeneracy targets is only demanded in exact mode.
    fn is_integral(&self) -> bool;

    /// Least common denominator of `values`: the smallest positive integer
    /// `m` such that `m * v` is integral for every `v`. Returns 1 in float
    /// mode.
    fn integral_scale(values: &[Self]) -> Self;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn recip(&self) -> Self {
        BigRational::recip(self)
    }

    fn tol() -> Self {
        BigRational::zero()
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }

    fn integral_scale(values: &[Self]) -> Self {
        let mut lcm = BigInt::one();
        for v in values {
            lcm = lcm.lcm(v.denom());
        }
        BigRational::from_integer(lcm)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn recip(&self) -> Self {
        1.0 / self
    }

    fn tol() -> Self {
        FLOAT_TOL
    }

    fn is_integral(&self) -> bool {
        true
    }

    fn integral_scale(_values: &[Self]) -> Self {
        1.0
    }
}

/// Energy representation: integers in exact mode, binary64 in float mode.
pub trait Energy: Copy + Debug + Display + PartialEq + PartialOrd + Add<Output = Self> {
    fn to_f64(&self) -> f64;
    fn is_finite(&self) -> bool;
    /// Total order used for canonical spectrum sorting.
    fn total_cmp(&self, other: &Self) -> Ordering;
}

impl Energy for i64 {
    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Energy for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
}

/// Inverse temperature `beta = ln(ratio)` with rational `ratio > 1`.
///
/// Chosen so that `e^(-beta*E) = ratio^(-E)` stays rational for integer
/// `E`; this is what makes exact mode possible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LnRatio {
    ratio: BigRational,
}

impl LnRatio {
    pub fn new(ratio: BigRational) -> Result<Self> {
        if ratio <= BigRational::one() {
            return Err(Error::NonPositiveBeta);
        }
        Ok(Self { ratio })
    }

    /// `beta = ln(num/den)`.
    pub fn from_ints(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::NonPositiveBeta);
        }
        Self::new(BigRational::from_ratio(num, den))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.ratio
    }

    /// Numeric value of beta.
    pub fn value(&self) -> f64 {
        Scalar::to_f64(&self.ratio).ln()
    }
}

impl Display for LnRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ln({})", self.ratio)
    }
}

/// Ties together the scalar field, energy type, and inverse temperature
/// of one arithmetic mode.
pub trait Mode: Clone + Debug + PartialEq + 'static {
    type Scalar: Scalar;
    type Energy: Energy;
    type Beta: Clone + Debug + Display + PartialEq;

    /// Boltzmann weight `e^(-beta * energy)`.
    fn boltzmann(beta: &Self::Beta, energy: &Self::Energy) -> Self::Scalar;

    /// Numeric value of beta, for log-domain output.
    fn beta_value(beta: &Self::Beta) -> f64;

    fn beta_eq(a: &Self::Beta, b: &Self::Beta) -> bool;
}

/// Rational arithmetic: `beta = ln(p/q)`, integer energies, zero tolerance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exact;

/// Binary64 arithmetic with absolute tolerance [`FLOAT_TOL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Float;

impl Mode for Exact {
    type Scalar = BigRational;
    type Energy = i64;
    type Beta = LnRatio;

    fn boltzmann(beta: &LnRatio, energy: &i64) -> BigRational {
        let exp = i32::try_from(-*energy).expect("energy exponent out of i32 range");
        Pow::pow(beta.ratio().clone(), exp)
    }

    fn beta_value(beta: &LnRatio) -> f64 {
        beta.value()
    }

    fn beta_eq(a: &LnRatio, b: &LnRatio) -> bool {
        a == b
    }
}

impl Mode for Float {
    type Scalar = f64;
    type Energy = f64;
    type Beta = f64;

    fn boltzmann(beta: &f64, energy: &f64) -> f64 {
        (-beta * energy).exp()
    }

    fn beta_value(beta: &f64) -> f64 {
        *beta
    }

    fn beta_eq(a: &f64, b: &f64) -> bool {
        a == b
    }
}

/// Parses `"p/q"`, `"7"`, or a decimal literal such as `"0.125"` into an
/// exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Parse {
        input: s.to_string(),
        expected: "rational (p/q, integer, or decimal)",
    };
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let i: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| err())?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let f: BigInt = frac.parse().map_err(|_| err())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole = BigRational::from_integer(i);
        let part = BigRational::new(f * BigInt::from(sign), scale);
        return Ok(whole + part);
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(BigRational::from_integer(n))
}

/// Parses `"ln(2)"` or `"ln(3/2)"` into an exact inverse temperature.
pub fn parse_ln_beta(s: &str) -> Result<LnRatio> {
    let t = s.trim();
    let inner = t
        .strip_prefix("ln(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse {
            input: s.to_string(),
            expected: "ln(p/q)",
        })?;
    LnRatio::new(parse_rational(inner)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn exact_boltzmann_is_integer_power() {
        let beta = LnRatio::from_ints(2, 1).unwrap();
        assert_eq!(Exact::boltzmann(&beta, &0), rat(1, 1));
        assert_eq!(Exact::boltzmann(&beta, &1), rat(1, 2));
        assert_eq!(Exact::boltzmann(&beta, &3), rat(1, 8));
        assert_eq!(Exact::boltzmann(&beta, &-2), rat(4, 1));
    }

    #[test]
    fn float_boltzmann_matches_exp() {
        let beta = 2.0f64.ln();
        assert!((Float::boltzmann(&beta, &1.0) - 0.5).abs() < 1e-15);
        assert!((Float::boltzmann(&beta, &0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ln_ratio_requires_ratio_above_one() {
        assert!(LnRatio::from_ints(1, 1).is_err());
        assert!(LnRatio::from_ints(1, 2).is_err());
        assert!(LnRatio::from_ints(3, 2).is_ok());
    }

    #[test]
    fn ln_ratio_value_is_log() {
        let beta = LnRatio::from_ints(3, 2).unwrap();
        assert!((beta.value() - 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn integral_scale_is_least_common_denominator() {
        let vals = [rat(1, 2), rat(2, 3), rat(5, 1)];
        assert_eq!(BigRational::integral_scale(&vals), rat(6, 1));
        for v in &vals {
            assert!((v.clone() * rat(6, 1)).is_integral());
        }
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("7").unwrap(), rat(7, 1));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("1.5").unwrap(), rat(3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn parse_beta_forms() {
        assert_eq!(parse_ln_beta("ln(2)").unwrap().ratio(), &rat(2, 1));
        assert_eq!(parse_ln_beta("ln(3/2)").unwrap().ratio(), &rat(3, 2));
        assert!(parse_ln_beta("2").is_err());
        assert!(parse_ln_beta("ln(1)").is_err());
    }

    #[test]
    fn scalar_tolerance_split() {
        assert!(<BigRational as Scalar>::EXACT);
        assert!(!<f64 as Scalar>::EXACT);
        assert_eq!(<BigRational as Scalar>::tol(), BigRational::zero());
        assert_eq!(<f64 as Scalar>::tol(), FLOAT_TOL);
    }
}
