//! End-to-end verification: random instances pushed through both the
//! counting oracle and the closed-form pipeline, reported as JSON.

use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use thermoflux::arith::{Float, Scalar};
use thermoflux::divergence::{d0_exp, d0_smooth_fractional_exp};
use thermoflux::error::Error;
use thermoflux::oracle::instances::{random_exact, to_float, ExactInstance};
use thermoflux::oracle::{oracle_forward_reverse, FiniteModel, OracleLimits};
use thermoflux::process::{deterministic_work, fluctuation_ratio, Work};
use thermoflux::system::BathModel;

use crate::error::{CliError, Result};
use crate::output::{json_object, json_string, render_json};
use crate::spec::{ModeChoice, RunSpec, Token};

/// Tolerance for float-mode identity checks, relative where the target
/// is away from zero.
pub const FLOAT_IDENTITY_TOL: f64 = 1e-12;

const MAX_INSTANCE_LEVELS: usize = 6;

pub struct VerifyOutcome {
    pub report: String,
    pub violations: usize,
}

fn rat(n: i64, d: i64) -> BigRational {
    <BigRational as Scalar>::from_ratio(n, d)
}

/// Smallest multiple of 1/64 at or above `x`; keeps bath degeneracies
/// small when the factor is fed to the counting oracle.
fn snap_up(x: &BigRational) -> BigRational {
    (x * rat(64, 1)).ceil() / rat(64, 1)
}

fn spec_echo(instance: &ExactInstance, mode: ModeChoice) -> RunSpec {
    RunSpec {
        beta: Token::Str(format!("ln({})", instance.ctx.beta().ratio())),
        energies: instance
            .spectrum
            .energies()
            .iter()
            .map(|&e| Token::Int(e))
            .collect(),
        probabilities: instance
            .rho
            .probs()
            .iter()
            .map(|p| Token::Str(p.to_string()))
            .collect(),
        epsilon: None,
        delta: None,
        w: None,
        reference_degeneracy: None,
        mode: Some(mode),
    }
}

/// One instance checked in exact mode: the deterministic identity at the
/// deterministic work, then the ratio identity over the (eps, delta)
/// grid at the snapped smoothed factor. `None` means the instance was
/// refused under the microstate cap.
fn check_exact(
    instance: &ExactInstance,
    limits: &OracleLimits,
) -> Result<Option<(bool, usize)>> {
    let bath = BathModel::new(instance.ctx.beta().clone(), rat(1, 1))
        .map_err(|e| CliError::Io(e.to_string()))?;
    let det = deterministic_work(&instance.rho, &instance.ctx)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let model = match FiniteModel::new(&instance.rho, &instance.ctx, &bath, &det, limits) {
        Ok(m) => m,
        Err(Error::MicrostateLimitExceeded { .. }) => return Ok(None),
        Err(e) => return Err(CliError::Io(e.to_string())),
    };
    let out = oracle_forward_reverse(&model, &rat(0, 1), &rat(0, 1))
        .map_err(|e| CliError::Io(e.to_string()))?;
    let identity = det.factor().recip()
        * d0_exp(&instance.rho, &instance.ctx).map_err(|e| CliError::Io(e.to_string()))?;
    let mut ok = out.p_forward() == &rat(1, 1)
        && out.p_reverse() == &rat(1, 1)
        && identity == rat(1, 1);
    let mut checks = 1usize;
    for eps in [rat(0, 1), rat(1, 10), rat(1, 4)] {
        let smooth = d0_smooth_fractional_exp(&instance.rho, &instance.ctx, &eps)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let work = Work::from_factor(snap_up(&smooth))
            .map_err(|e| CliError::Io(e.to_string()))?;
        let model =
            match FiniteModel::new(&instance.rho, &instance.ctx, &bath, &work, limits) {
                Ok(m) => m,
                Err(Error::MicrostateLimitExceeded { .. }) => return Ok(None),
                Err(e) => return Err(CliError::Io(e.to_string())),
            };
        for delta in [rat(0, 1), rat(1, 10), rat(1, 2)] {
            let out = oracle_forward_reverse(&model, &eps, &delta)
                .map_err(|e| CliError::Io(e.to_string()))?;
            let closed =
                fluctuation_ratio(&instance.rho, &instance.ctx, &work, &eps, &delta)
                    .map_err(|e| CliError::Io(e.to_string()))?;
            ok &= out.ratio() == &closed;
            checks += 1;
        }
    }
    Ok(Some((ok, checks)))
}

fn close(a: f64, b: f64) -> bool {
    let scale = b.abs().max(1.0);
    (a - b).abs() <= FLOAT_IDENTITY_TOL * scale
}

/// The same checks in float arithmetic, within [`FLOAT_IDENTITY_TOL`].
fn check_float(
    instance: &ExactInstance,
    limits: &OracleLimits,
) -> Result<Option<(bool, usize)>> {
    let (_, ctx, rho) = to_float(instance);
    let bath = BathModel::<Float>::new(ctx.beta_value(), 1.0)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let det =
        deterministic_work(&rho, &ctx).map_err(|e| CliError::Io(e.to_string()))?;
    let model = match FiniteModel::new(&rho, &ctx, &bath, &det, limits) {
        Ok(m) => m,
        Err(Error::MicrostateLimitExceeded { .. }) => return Ok(None),
        Err(e) => return Err(CliError::Io(e.to_string())),
    };
    let out = oracle_forward_reverse(&model, &0.0, &0.0)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let identity = det.factor().recip()
        * d0_exp(&rho, &ctx).map_err(|e| CliError::Io(e.to_string()))?;
    let mut ok = close(*out.p_forward(), 1.0)
        && close(*out.p_reverse(), 1.0)
        && close(identity, 1.0);
    let mut checks = 1usize;
    for eps in [0.0, 0.1, 0.25] {
        let smooth = d0_smooth_fractional_exp(&rho, &ctx, &eps)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let snapped = (smooth * 64.0).ceil() / 64.0;
        let work = Work::from_factor(snapped).map_err(|e| CliError::Io(e.to_string()))?;
        let model = match FiniteModel::new(&rho, &ctx, &bath, &work, limits) {
            Ok(m) => m,
            Err(Error::MicrostateLimitExceeded { .. }) => return Ok(None),
            Err(e) => return Err(CliError::Io(e.to_string())),
        };
        for delta in [0.0, 0.1, 0.5] {
            let out = oracle_forward_reverse(&model, &eps, &delta)
                .map_err(|e| CliError::Io(e.to_string()))?;
            let closed = fluctuation_ratio(&rho, &ctx, &work, &eps, &delta)
                .map_err(|e| CliError::Io(e.to_string()))?;
            ok &= close(*out.ratio(), closed);
            checks += 1;
        }
    }
    Ok(Some((ok, checks)))
}

pub fn run(instances: usize, seed: u64, mode: ModeChoice) -> Result<VerifyOutcome> {
    if instances == 0 {
        return Err(CliError::Malformed(
            "\"--instances\" must be at least 1".to_string(),
        ));
    }
    let limits = OracleLimits::from_env();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempt_budget = instances * 50 + 50;
    let mut attempts = 0usize;
    let mut skipped = 0usize;
    let mut violations = 0usize;
    let mut results = Vec::with_capacity(instances);
    while results.len() < instances {
        attempts += 1;
        if attempts > attempt_budget {
            return Err(CliError::Infeasible(format!(
                "exhausted {attempt_budget} attempts under the microstate cap; \
                 raise THERMOFLUX_MAX_MICROSTATES"
            )));
        }
        let instance = random_exact(&mut rng, MAX_INSTANCE_LEVELS);
        let checked = match mode {
            ModeChoice::Exact => check_exact(&instance, &limits)?,
            ModeChoice::Float => check_float(&instance, &limits)?,
        };
        let Some((ok, checks)) = checked else {
            skipped += 1;
            continue;
        };
        if !ok {
            violations += 1;
        }
        results.push(json_object(vec![
            ("spec", spec_echo(&instance, mode).to_value()),
            ("checks", Value::from(checks as u64)),
            ("ok", Value::Bool(ok)),
        ]));
    }
    let report = render_json(&json_object(vec![
        ("mode", json_string(mode.name())),
        ("seed", Value::from(seed)),
        ("requested_instances", Value::from(instances as u64)),
        ("verified_instances", Value::from(results.len() as u64)),
        ("skipped_instances", Value::from(skipped as u64)),
        ("violations", Value::from(violations as u64)),
        ("results", Value::Array(results)),
    ]));
    Ok(VerifyOutcome { report, violations })
}
