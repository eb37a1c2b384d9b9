//! Brute-force verification by explicit microstate counting.
//!
//! Everything here deliberately duplicates logic that exists elsewhere in
//! the crate: the ordering, the smoothing, and the probability accounting
//! are reimplemented from the microstate picture so that agreement with
//! the closed forms in [`crate::process`] is evidence rather than
//! tautology. Nothing in this module calls the closed-form identities.
//!
//! The model of a process is finite and literal: every energy shell of
//! the bath is an integer number of eigenstates, a current matrix says
//! how many eigenstates flow from each initial shell to each final shell,
//! and a probability is a sum of per-eigenstate contributions. The
//! forward matrix is filled northwest-corner against the destination
//! capacities; the reverse matrix distributes each source shell
//! proportionally over the smoothed destination shells, which is the
//! unique fill with no preferred destination.

use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::arith::{Exact, Float, LnRatio, Mode, Scalar};
use crate::error::{Error, Result};
use crate::process::{check_delta, check_epsilon, Work};
use crate::system::{BathModel, DiagonalState, EnergySpectrum, ThermalContext};

/// Resource ceilings for exhaustive enumeration. The oracle refuses work
/// beyond them; it never approximates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_levels: usize,
    pub max_microstates: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_levels: 12,
            max_microstates: 10_000_000,
        }
    }
}

impl OracleLimits {
    pub const ENV_MAX_MICROSTATES: &'static str = "THERMOFLUX_MAX_MICROSTATES";

    /// Default limits, with the microstate cap overridable through the
    /// `THERMOFLUX_MAX_MICROSTATES` environment variable. Unparseable
    /// values are ignored.
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        if let Ok(raw) = std::env::var(Self::ENV_MAX_MICROSTATES) {
            if let Ok(value) = raw.trim().parse::<u64>() {
                limits.max_microstates = value;
            }
        }
        limits
    }
}

/// A system, bath, and work target small enough to count eigenstates
/// exhaustively. Construction scales the bath reference degeneracy so
/// every shell is a whole number of eigenstates in exact mode.
#[derive(Clone, Debug)]
pub struct FiniteModel<M: Mode> {
    rho: DiagonalState<M>,
    ctx: ThermalContext<M>,
    work: Work<M>,
    scale_applied: M::Scalar,
    row_degens: Vec<M::Scalar>,
    col_degens: Vec<M::Scalar>,
}

impl<M: Mode> FiniteModel<M> {
    pub fn new(
        rho: &DiagonalState<M>,
        ctx: &ThermalContext<M>,
        bath: &BathModel<M>,
        work: &Work<M>,
        limits: &OracleLimits,
    ) -> Result<Self> {
        if !rho.same_spectrum(ctx.spectrum()) {
            return Err(Error::SpectrumMismatch);
        }
        if !bath.beta_matches(ctx.beta()) {
            return Err(Error::BetaMismatch);
        }
        if !rho.is_physical() {
            return Err(Error::NotPhysical {
                total: rho.total_mass().to_string(),
            });
        }
        let n = ctx.spectrum().len();
        if n > limits.max_levels {
            return Err(Error::LevelLimitExceeded {
                levels: n,
                max: limits.max_levels,
            });
        }
        let raw: Vec<M::Scalar> = (0..n)
            .map(|i| bath.degeneracy(&ctx.spectrum().energy(i)))
            .chain(
                (0..n).map(|j| {
                    bath.degeneracy_scaled(&ctx.spectrum().energy(j), work.factor())
                }),
            )
            .collect();
        let scale_applied = M::Scalar::integral_scale(&raw);
        let row_degens: Vec<M::Scalar> = raw[..n]
            .iter()
            .map(|g| g.clone() * scale_applied.clone())
            .collect();
        let col_degens: Vec<M::Scalar> = raw[n..]
            .iter()
            .map(|g| g.clone() * scale_applied.clone())
            .collect();
        let model = FiniteModel {
            rho: rho.clone(),
            ctx: ctx.clone(),
            work: work.clone(),
            scale_applied,
            row_degens,
            col_degens,
        };
        let total = model.total_microstates().to_f64();
        if !(total <= limits.max_microstates as f64) {
            return Err(Error::MicrostateLimitExceeded {
                needed: model.total_microstates().to_string(),
                max: limits.max_microstates,
            });
        }
        Ok(model)
    }

    pub fn rho(&self) -> &DiagonalState<M> {
        &self.rho
    }

    pub fn ctx(&self) -> &ThermalContext<M> {
        &self.ctx
    }

    pub fn work(&self) -> &Work<M> {
        &self.work
    }

    /// Multiplier applied to the bath reference degeneracy to make every
    /// shell integral. 1 when the given bath was already integral.
    pub fn scale_applied(&self) -> &M::Scalar {
        &self.scale_applied
    }

    /// Initial shells: `(level, eigenstate count)` over the support.
    pub fn initial_shells(&self) -> Vec<(usize, M::Scalar)> {
        self.rho
            .support()
            .into_iter()
            .map(|i| (i, self.row_degens[i].clone()))
            .collect()
    }

    /// Final shells with the battery loaded: `(level, eigenstate count)`.
    pub fn final_shells(&self) -> Vec<(usize, M::Scalar)> {
        (0..self.col_degens.len())
            .map(|j| (j, self.col_degens[j].clone()))
            .collect()
    }

    /// Eigenstates the enumeration touches: initial support shells plus
    /// all final shells.
    pub fn total_microstates(&self) -> M::Scalar {
        let rows: M::Scalar = self
            .initial_shells()
            .into_iter()
            .map(|(_, g)| g)
            .sum();
        let cols: M::Scalar = self.col_degens.iter().cloned().sum();
        rows + cols
    }
}

/// Forward and reverse success probabilities from exhaustive counting.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleOutcome<M: Mode> {
    p_forward: M::Scalar,
    p_reverse: M::Scalar,
    ratio: M::Scalar,
    forward_feasible: bool,
    reverse_feasible: bool,
    scale_applied: M::Scalar,
}

impl<M: Mode> OracleOutcome<M> {
    pub fn p_forward(&self) -> &M::Scalar {
        &self.p_forward
    }

    pub fn p_reverse(&self) -> &M::Scalar {
        &self.p_reverse
    }

    pub fn ratio(&self) -> &M::Scalar {
        &self.ratio
    }

    /// True when every smoothed source eigenstate found room in some
    /// destination shell.
    pub fn forward_feasible(&self) -> bool {
        self.forward_feasible
    }

    /// True when the reverse probability is a genuine probability (at
    /// most 1).
    pub fn reverse_feasible(&self) -> bool {
        self.reverse_feasible
    }

    pub fn scale_applied(&self) -> &M::Scalar {
        &self.scale_applied
    }
}

/// Counts both directions of the process eigenstate by eigenstate.
///
/// Forward: beta-order the support by per-eigenstate probability, keep
/// mass `1 - epsilon` (fractional boundary shell), and push the kept
/// currents northwest-corner into the destination shells. Reverse: commit
/// fraction `1 - delta` of every destination shell as source current and
/// spread it proportionally over the smoothed shells, scoring each
/// transported eigenstate at the destination's per-eigenstate
/// probability.
pub fn oracle_forward_reverse<M: Mode>(
    model: &FiniteModel<M>,
    epsilon: &M::Scalar,
    delta: &M::Scalar,
) -> Result<OracleOutcome<M>> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let rho = &model.rho;
    // Beta-order: support levels by decreasing per-eigenstate probability
    // P_i / g_i, ties toward the lower level.
    let mut order: Vec<usize> = rho
        .support()
        .into_iter()
        .collect();
    order.sort_by(|&a, &b| {
        let ka = rho.prob(a).clone() * model.row_degens[a].recip();
        let kb = rho.prob(b).clone() * model.row_degens[b].recip();
        kb.partial_cmp(&ka)
            .expect("finite keys")
            .then(a.cmp(&b))
    });
    // Fractional smoothing: whole shells until the next would overshoot
    // mass 1 - epsilon, then a fractional piece of that shell.
    let target = M::Scalar::one() - epsilon.clone();
    let mut kept: Vec<(usize, M::Scalar, M::Scalar)> = Vec::new();
    let mut acc = M::Scalar::zero();
    for &i in &order {
        let p = rho.prob(i).clone();
        if acc.clone() + p.clone() <= target {
            acc = acc + p.clone();
            kept.push((i, model.row_degens[i].clone(), p));
            if acc == target {
                break;
            }
        } else {
            let remainder = target.clone() - acc.clone();
            if remainder > M::Scalar::zero() {
                let fraction = remainder.clone() / p;
                kept.push((i, fraction * model.row_degens[i].clone(), remainder));
            }
            break;
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptySupport);
    }
    // Per-eigenstate probability of each kept shell: carried mass over
    // participating eigenstates.
    let scores: Vec<M::Scalar> = kept
        .iter()
        .map(|(_, current, carried)| carried.clone() * current.recip())
        .collect();
    let source_total: M::Scalar =
        kept.iter().map(|(_, current, _)| current.clone()).sum();
    let capacity_total: M::Scalar = model.col_degens.iter().cloned().sum();
    let forward_feasible = source_total.approx_le(&capacity_total);

    // Forward: drain each kept shell into destination capacity, counting
    // P_i / g_i per transported eigenstate.
    let mut p_forward = M::Scalar::zero();
    let mut row_rem: Vec<M::Scalar> =
        kept.iter().map(|(_, current, _)| current.clone()).collect();
    let mut cap_rem = model.col_degens.clone();
    let mut r = 0;
    let mut c = 0;
    while r < kept.len() && c < cap_rem.len() {
        let k = if row_rem[r] <= cap_rem[c] {
            row_rem[r].clone()
        } else {
            cap_rem[c].clone()
        };
        p_forward = p_forward + k.clone() * scores[r].clone();
        row_rem[r] = row_rem[r].clone() - k.clone();
        cap_rem[c] = cap_rem[c].clone() - k;
        let row_done = row_rem[r].is_zero();
        let col_done = cap_rem[c].is_zero();
        if row_done {
            r += 1;
        }
        if col_done {
            c += 1;
        }
    }

    // Reverse: source shells are the destination shells with fraction
    // 1 - delta committed; spread each over the smoothed shells in
    // proportion to their sizes, scoring carried / current per
    // eigenstate.
    let one_minus_delta = M::Scalar::one() - delta.clone();
    let dest_total = source_total;
    let mut p_reverse = M::Scalar::zero();
    for h in model.col_degens.iter() {
        let committed = one_minus_delta.clone() * h.clone();
        for ((_, current, _), score) in kept.iter().zip(&scores) {
            let k = committed.clone() * current.clone() / dest_total.clone();
            p_reverse = p_reverse + k * score.clone();
        }
    }
    let reverse_feasible = p_reverse.approx_le(&M::Scalar::one());
    let ratio = p_forward.clone() / p_reverse.clone();
    Ok(OracleOutcome {
        p_forward,
        p_reverse,
        ratio,
        forward_feasible,
        reverse_feasible,
        scale_applied: model.scale_applied.clone(),
    })
}

/// `e^(D0)` maximized over every support subset whose removed mass is at
/// most `epsilon`: plain enumeration of all `2^s` subsets.
pub fn oracle_smoothing_exp<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
    limits: &OracleLimits,
) -> Result<M::Scalar> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    let mass = rho.total_mass();
    if *epsilon < M::Scalar::zero() || *epsilon >= mass {
        return Err(Error::EpsilonOutOfRange {
            value: epsilon.to_string(),
        });
    }
    let support = rho.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if support.len() > limits.max_levels {
        return Err(Error::LevelLimitExceeded {
            levels: support.len(),
            max: limits.max_levels,
        });
    }
    let full: M::Scalar = support.iter().map(|&i| ctx.weight(i).clone()).sum();
    let mut best = full.clone();
    for mask in 1u64..(1u64 << support.len()) {
        let mut removed_mass = M::Scalar::zero();
        let mut removed_weight = M::Scalar::zero();
        for (bit, &level) in support.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                removed_mass = removed_mass + rho.prob(level).clone();
                removed_weight = removed_weight + ctx.weight(level).clone();
            }
        }
        if removed_mass <= *epsilon {
            let kept = full.clone() - removed_weight;
            if kept < best {
                best = kept;
            }
        }
    }
    Ok(best / ctx.partition().clone())
}

/// Natural log of [`oracle_smoothing_exp`].
pub fn oracle_smoothing<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
    limits: &OracleLimits,
) -> Result<f64> {
    Ok(oracle_smoothing_exp(rho, ctx, epsilon, limits)?.to_f64().ln())
}

/// Seeded random instances guaranteed representable in exact mode.
pub mod instances {
    use super::*;

    /// One random exact-mode system: spectrum, thermal context, state.
    #[derive(Clone, Debug)]
    pub struct ExactInstance {
        pub spectrum: Arc<EnergySpectrum<Exact>>,
        pub ctx: ThermalContext<Exact>,
        pub rho: DiagonalState<Exact>,
    }

    /// Draws integer energies in `[0, 6]`, `beta` of `ln 2` or `ln 3`,
    /// and probabilities `k_i / sum(k)` with `k_i <= 64`; at least one
    /// level is occupied.
    pub fn random_exact<R: Rng>(rng: &mut R, max_levels: usize) -> ExactInstance {
        let n = rng.gen_range(1..=max_levels.max(1));
        let energies: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
        let beta = if rng.gen::<bool>() {
            LnRatio::from_ints(2, 1)
        } else {
            LnRatio::from_ints(3, 1)
        }
        .expect("ratio above 1");
        let spectrum =
            Arc::new(EnergySpectrum::<Exact>::new(energies).expect("nonempty finite"));
        let ctx = ThermalContext::new(Arc::clone(&spectrum), beta).expect("positive beta");
        loop {
            let counts: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=64)).collect();
            let total: i64 = counts.iter().sum();
            if total == 0 {
                continue;
            }
            let probs: Vec<num_rational::BigRational> = counts
                .iter()
                .map(|&k| <num_rational::BigRational as Scalar>::from_ratio(k, total))
                .collect();
            let rho = DiagonalState::from_input_order(Arc::clone(&spectrum), &probs)
                .expect("normalized by construction");
            return ExactInstance {
                spectrum,
                ctx,
                rho,
            };
        }
    }

    /// The same instance in binary64, canonical level order preserved.
    pub fn to_float(
        instance: &ExactInstance,
    ) -> (
        Arc<EnergySpectrum<Float>>,
        ThermalContext<Float>,
        DiagonalState<Float>,
    ) {
        let energies: Vec<f64> = instance
            .spectrum
            .energies()
            .iter()
            .map(|&e| e as f64)
            .collect();
        let spectrum =
            Arc::new(EnergySpectrum::<Float>::new(energies).expect("nonempty finite"));
        let ctx = ThermalContext::new(Arc::clone(&spectrum), instance.ctx.beta().value())
            .expect("positive beta");
        let probs: Vec<f64> = instance.rho.probs().iter().map(|p| p.to_f64()).collect();
        let rho =
            DiagonalState::new(Arc::clone(&spectrum), probs).expect("mass within tolerance");
        (spectrum, ctx, rho)
    }
}
