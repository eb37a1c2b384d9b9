//! Spec-file ingestion: a JSON system description resolved into an exact
//! or float problem.
//!
//! Exact mode insists on symbolic input: beta as `"ln(p/q)"`, integer
//! energies, probabilities as `"p/q"` strings or integers. Float mode
//! takes plain numbers and also accepts the exact forms. A non-integer
//! JSON number is rejected in exact mode instead of being converted,
//! because its binary value is almost never the decimal the author meant.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};

use thermoflux::arith::{parse_ln_beta, parse_rational, Exact, Float, Mode, Scalar};
use thermoflux::process::Work;
use thermoflux::system::{DiagonalState, EnergySpectrum, ThermalContext};

use crate::error::{malformed, CliError, Result};

/// Largest denominator allowed when an exact-mode work value has to be
/// snapped to a rational Boltzmann factor.
pub const SNAP_MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeChoice {
    Exact,
    Float,
}

impl ModeChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModeChoice::Exact => "exact",
            ModeChoice::Float => "float",
        }
    }
}

impl FromStr for ModeChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ModeChoice::Exact),
            "float" => Ok(ModeChoice::Float),
            other => Err(CliError::Malformed(format!(
                "mode must be \"exact\" or \"float\", got \"{other}\""
            ))),
        }
    }
}

/// One scalar field as it appeared in the JSON, before mode resolution.
#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Int(i64),
    Num(f64),
    Str(String),
}

impl Token {
    fn from_value(v: &Value, field: &str) -> Result<Token> {
        match v {
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Token::Int(i))
                } else if let Some(f) = n.as_f64() {
                    Ok(Token::Num(f))
                } else {
                    Err(CliError::Malformed(format!(
                        "field \"{field}\": number {n} does not fit a 64-bit value"
                    )))
                }
            }
            Value::String(s) => Ok(Token::Str(s.clone())),
            other => Err(CliError::Malformed(format!(
                "field \"{field}\": expected a number or string, got {other}"
            ))),
        }
    }

    fn to_value(&self) -> Value {
        match self {
            Token::Int(i) => Value::from(*i),
            Token::Num(f) => Value::from(*f),
            Token::Str(s) => Value::from(s.clone()),
        }
    }

    fn exact_rational(&self, field: &str) -> Result<BigRational> {
        match self {
            Token::Int(i) => Ok(BigRational::from_integer(BigInt::from(*i))),
            Token::Str(s) => parse_rational(s).map_err(malformed),
            Token::Num(_) => Err(CliError::Malformed(format!(
                "field \"{field}\": exact mode needs rationals as strings (\"p/q\") \
                 or integers, not floating-point numbers"
            ))),
        }
    }

    fn float_number(&self, field: &str) -> Result<f64> {
        match self {
            Token::Int(i) => Ok(*i as f64),
            Token::Num(f) => Ok(*f),
            Token::Str(s) => {
                if let Ok(f) = s.trim().parse::<f64>() {
                    return Ok(f);
                }
                parse_rational(s)
                    .map(|r| Scalar::to_f64(&r))
                    .map_err(|_| {
                        CliError::Malformed(format!(
                            "field \"{field}\": cannot read \"{s}\" as a number"
                        ))
                    })
            }
        }
    }

    fn exact_energy(&self, field: &str) -> Result<i64> {
        match self {
            Token::Int(i) => Ok(*i),
            Token::Num(f) if f.fract() == 0.0 && f64::abs(*f) < 9.0e15 => Ok(*f as i64),
            Token::Str(s) => s.trim().parse::<i64>().map_err(|_| {
                CliError::Malformed(format!(
                    "field \"{field}\": exact mode needs integer energies, got \"{s}\""
                ))
            }),
            _ => Err(CliError::Malformed(format!(
                "field \"{field}\": exact mode needs integer energies"
            ))),
        }
    }
}

/// Parsed but mode-unresolved description of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub beta: Token,
    pub energies: Vec<Token>,
    pub probabilities: Vec<Token>,
    pub epsilon: Option<Token>,
    pub delta: Option<Token>,
    pub w: Option<Token>,
    pub reference_degeneracy: Option<Token>,
    pub mode: Option<ModeChoice>,
}

impl RunSpec {
    pub fn from_json(raw: &str) -> Result<RunSpec> {
        let value: Value = serde_json::from_str(raw)
            .map_err(|e| CliError::Malformed(format!("spec is not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<RunSpec> {
        let obj = value.as_object().ok_or_else(|| {
            CliError::Malformed("spec must be a JSON object".to_string())
        })?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "beta" | "energies" | "probabilities" | "epsilon" | "delta" | "w" | "G"
                    | "mode"
            ) {
                return Err(CliError::Malformed(format!("unknown spec field \"{key}\"")));
            }
        }
        let beta = Token::from_value(
            obj.get("beta").ok_or_else(|| {
                CliError::Malformed("spec is missing \"beta\"".to_string())
            })?,
            "beta",
        )?;
        let energies = Self::token_array(obj, "energies")?;
        let probabilities = Self::token_array(obj, "probabilities")?;
        if energies.len() != probabilities.len() {
            return Err(CliError::Malformed(format!(
                "{} energies but {} probabilities",
                energies.len(),
                probabilities.len()
            )));
        }
        let optional = |key: &str| -> Result<Option<Token>> {
            obj.get(key).map(|v| Token::from_value(v, key)).transpose()
        };
        let mode = match obj.get("mode") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<ModeChoice>()?),
            Some(other) => {
                return Err(CliError::Malformed(format!(
                    "field \"mode\": expected \"exact\" or \"float\", got {other}"
                )))
            }
        };
        Ok(RunSpec {
            beta,
            energies,
            probabilities,
            epsilon: optional("epsilon")?,
            delta: optional("delta")?,
            w: optional("w")?,
            reference_degeneracy: optional("G")?,
            mode,
        })
    }

    fn token_array(obj: &Map<String, Value>, field: &str) -> Result<Vec<Token>> {
        let arr = obj
            .get(field)
            .and_then(Value::as_array)
            .ok_or_else(|| {
                CliError::Malformed(format!("spec needs \"{field}\" as an array"))
            })?;
        if arr.is_empty() {
            return Err(CliError::Malformed(format!("\"{field}\" must not be empty")));
        }
        arr.iter().map(|v| Token::from_value(v, field)).collect()
    }

    /// Serialization that [`RunSpec::from_value`] accepts back unchanged.
    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("beta".to_string(), self.beta.to_value());
        obj.insert(
            "energies".to_string(),
            Value::Array(self.energies.iter().map(Token::to_value).collect()),
        );
        obj.insert(
            "probabilities".to_string(),
            Value::Array(self.probabilities.iter().map(Token::to_value).collect()),
        );
        if let Some(t) = &self.epsilon {
            obj.insert("epsilon".to_string(), t.to_value());
        }
        if let Some(t) = &self.delta {
            obj.insert("delta".to_string(), t.to_value());
        }
        if let Some(t) = &self.w {
            obj.insert("w".to_string(), t.to_value());
        }
        if let Some(t) = &self.reference_degeneracy {
            obj.insert("G".to_string(), t.to_value());
        }
        if let Some(m) = self.mode {
            obj.insert("mode".to_string(), Value::from(m.name()));
        }
        Value::Object(obj)
    }

    /// Command-line flags win over spec-file fields.
    pub fn with_overrides(
        mut self,
        epsilon: Option<&str>,
        delta: Option<&str>,
        w: Option<&str>,
    ) -> RunSpec {
        if let Some(e) = epsilon {
            self.epsilon = Some(Token::Str(e.to_string()));
        }
        if let Some(d) = delta {
            self.delta = Some(Token::Str(d.to_string()));
        }
        if let Some(v) = w {
            self.w = Some(Token::Str(v.to_string()));
        }
        self
    }

    /// Flag beats file beats inference; inference picks exact only when
    /// every field has an exact reading.
    pub fn resolved_mode(&self, flag: Option<ModeChoice>) -> ModeChoice {
        if let Some(m) = flag {
            return m;
        }
        if let Some(m) = self.mode {
            return m;
        }
        if self.looks_exact() {
            ModeChoice::Exact
        } else {
            ModeChoice::Float
        }
    }

    fn looks_exact(&self) -> bool {
        let beta_ok = matches!(&self.beta, Token::Str(s) if s.trim_start().starts_with("ln("));
        let energy_ok = self
            .energies
            .iter()
            .all(|t| matches!(t, Token::Int(_)));
        let scalar_ok = |t: &Option<Token>| {
            t.iter()
                .all(|t| matches!(t, Token::Int(_) | Token::Str(_)))
        };
        beta_ok
            && energy_ok
            && self
                .probabilities
                .iter()
                .all(|t| matches!(t, Token::Int(_) | Token::Str(_)))
            && scalar_ok(&self.epsilon)
            && scalar_ok(&self.delta)
            && scalar_ok(&self.w)
            && scalar_ok(&self.reference_degeneracy)
    }
}

/// The requested work value with its mode-resolved Boltzmann factor.
#[derive(Clone, Debug)]
pub struct RequestedWork<M: Mode> {
    /// The value as the caller wrote it.
    pub requested: String,
    pub work: Work<M>,
    /// True when the factor is a rational approximation of `e^(-beta*w)`
    /// rather than its exact value.
    pub snapped: bool,
}

/// A run spec resolved against one arithmetic mode.
#[derive(Clone, Debug)]
pub struct Problem<M: Mode> {
    pub ctx: ThermalContext<M>,
    pub rho: DiagonalState<M>,
    pub epsilon: M::Scalar,
    pub delta: M::Scalar,
    pub w: Option<RequestedWork<M>>,
    pub reference_degeneracy: M::Scalar,
}

fn check_unit_interval<S: Scalar>(value: &S, field: &str) -> Result<()> {
    if *value < S::zero() || *value >= S::one() {
        return Err(CliError::Malformed(format!(
            "\"{field}\" must lie in [0, 1), got {value}"
        )));
    }
    Ok(())
}

pub fn build_exact(spec: &RunSpec) -> Result<Problem<Exact>> {
    let beta = match &spec.beta {
        Token::Str(s) => parse_ln_beta(s).map_err(malformed)?,
        _ => {
            return Err(CliError::Malformed(
                "exact mode needs beta written as \"ln(p/q)\"".to_string(),
            ))
        }
    };
    let energies = spec
        .energies
        .iter()
        .map(|t| t.exact_energy("energies"))
        .collect::<Result<Vec<i64>>>()?;
    let probs = spec
        .probabilities
        .iter()
        .map(|t| t.exact_rational("probabilities"))
        .collect::<Result<Vec<BigRational>>>()?;
    let spectrum = Arc::new(EnergySpectrum::<Exact>::new(energies).map_err(malformed)?);
    let ctx = ThermalContext::new(Arc::clone(&spectrum), beta).map_err(malformed)?;
    let rho = DiagonalState::from_input_order(spectrum, &probs).map_err(malformed)?;
    if !rho.is_physical() {
        return Err(CliError::Malformed(format!(
            "probabilities must sum to 1, got {}",
            rho.total_mass()
        )));
    }
    let epsilon = match &spec.epsilon {
        Some(t) => t.exact_rational("epsilon")?,
        None => BigRational::zero(),
    };
    check_unit_interval(&epsilon, "epsilon")?;
    let delta = match &spec.delta {
        Some(t) => t.exact_rational("delta")?,
        None => BigRational::zero(),
    };
    check_unit_interval(&delta, "delta")?;
    let reference_degeneracy = match &spec.reference_degeneracy {
        Some(t) => t.exact_rational("G")?,
        None => BigRational::one(),
    };
    if reference_degeneracy <= BigRational::zero() {
        return Err(CliError::Malformed(format!(
            "\"G\" must be positive, got {reference_degeneracy}"
        )));
    }
    let w = match &spec.w {
        Some(t) => {
            let value = t.exact_rational("w")?;
            Some(resolve_exact_work(&ctx, &value)?)
        }
        None => None,
    };
    Ok(Problem {
        ctx,
        rho,
        epsilon,
        delta,
        w,
        reference_degeneracy,
    })
}

/// Integer work values have exact rational factors; anything else is
/// snapped to the best rational approximation of `e^(-beta*w)` with
/// denominator at most [`SNAP_MAX_DENOMINATOR`].
fn resolve_exact_work(
    ctx: &ThermalContext<Exact>,
    value: &BigRational,
) -> Result<RequestedWork<Exact>> {
    let requested = value.to_string();
    if value.is_integer() {
        if let Some(e) = value.to_integer().to_i64() {
            let factor = Exact::boltzmann(ctx.beta(), &e);
            let work = Work::from_factor(factor).map_err(malformed)?;
            return Ok(RequestedWork {
                requested,
                work,
                snapped: false,
            });
        }
    }
    let target = (-ctx.beta_value() * Scalar::to_f64(value)).exp();
    if !target.is_finite() || target <= 0.0 {
        return Err(CliError::Malformed(format!(
            "w = {requested} has no representable Boltzmann factor"
        )));
    }
    let factor = best_rational(target, SNAP_MAX_DENOMINATOR);
    if factor.is_zero() {
        return Err(CliError::Malformed(format!(
            "w = {requested} is too large to snap to a rational factor with \
             denominator at most {SNAP_MAX_DENOMINATOR}"
        )));
    }
    let work = Work::from_factor(factor).map_err(malformed)?;
    Ok(RequestedWork {
        requested,
        work,
        snapped: true,
    })
}

pub fn build_float(spec: &RunSpec) -> Result<Problem<Float>> {
    let beta = match &spec.beta {
        Token::Str(s) if s.trim_start().starts_with("ln(") => {
            parse_ln_beta(s).map_err(malformed)?.value()
        }
        t => t.float_number("beta")?,
    };
    if !beta.is_finite() || beta <= 0.0 {
        return Err(CliError::Malformed(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let energies = spec
        .energies
        .iter()
        .map(|t| t.float_number("energies"))
        .collect::<Result<Vec<f64>>>()?;
    let probs = spec
        .probabilities
        .iter()
        .map(|t| t.float_number("probabilities"))
        .collect::<Result<Vec<f64>>>()?;
    let spectrum = Arc::new(EnergySpectrum::<Float>::new(energies).map_err(malformed)?);
    let ctx = ThermalContext::new(Arc::clone(&spectrum), beta).map_err(malformed)?;
    let rho = DiagonalState::from_input_order(spectrum, &probs).map_err(malformed)?;
    if !rho.is_physical() {
        return Err(CliError::Malformed(format!(
            "probabilities must sum to 1, got {}",
            rho.total_mass()
        )));
    }
    let scalar = |t: &Option<Token>, field: &str, default: f64| -> Result<f64> {
        match t {
            Some(t) => t.float_number(field),
            None => Ok(default),
        }
    };
    let epsilon = scalar(&spec.epsilon, "epsilon", 0.0)?;
    check_unit_interval(&epsilon, "epsilon")?;
    let delta = scalar(&spec.delta, "delta", 0.0)?;
    check_unit_interval(&delta, "delta")?;
    let reference_degeneracy = scalar(&spec.reference_degeneracy, "G", 1.0)?;
    if !(reference_degeneracy > 0.0) || !reference_degeneracy.is_finite() {
        return Err(CliError::Malformed(format!(
            "\"G\" must be positive, got {reference_degeneracy}"
        )));
    }
    let w = match &spec.w {
        Some(t) => {
            let value = t.float_number("w")?;
            let factor = (-beta * value).exp();
            let work = Work::from_factor(factor).map_err(malformed)?;
            Some(RequestedWork {
                requested: format!("{value}"),
                work,
                snapped: false,
            })
        }
        None => None,
    };
    Ok(Problem {
        ctx,
        rho,
        epsilon,
        delta,
        w,
        reference_degeneracy,
    })
}

/// Closest rational to `x` among all with denominator at most `max_den`,
/// by the classic continued-fraction walk over convergents and their
/// final semiconvergent.
pub fn best_rational(x: f64, max_den: u64) -> BigRational {
    assert!(x >= 0.0 && x.is_finite() && max_den >= 1);
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (BigInt::from(x.floor() as i64), BigInt::from(1));
    let limit = BigInt::from(max_den);
    let mut frac = x.fract();
    while !frac.is_zero() {
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv.fract();
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2 > limit {
            // Largest semiconvergent still under the limit.
            let k = (&limit - &q0) / &q1;
            let ps = &k * &p1 + &p0;
            let qs = &k * &q1 + &q0;
            let semi = BigRational::new(ps, qs);
            let conv = BigRational::new(p1, q1);
            let target = BigRational::from_float(x).expect("finite");
            let err = |c: &BigRational| Signed::abs(&(c - &target));
            return if err(&semi) < err(&conv) { semi } else { conv };
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        if a >= 9.0e15 {
            break;
        }
    }
    BigRational::new(p1, q1)
}
