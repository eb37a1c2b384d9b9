//! Work quantities and the fluctuation identity for near-deterministic
//! extraction, plus the explicit microstate-current construction.
//!
//! Work values are stored as Boltzmann factors `e^(-beta * w)` rather
//! than as reals: the factor is what every identity multiplies by, and it
//! stays rational in exact mode while `w` itself generally does not. The
//! real value is recovered on demand via [`Work::value`].
//!
//! The central identity relates three quantities for a process that
//! deposits `w` into a two-level battery with failure probability at most
//! `epsilon`, run backwards with failure at most `delta`:
//!
//! ```text
//! forward_probability / reverse_probability = exp(beta * W_delta + D0_eps)
//! ```
//!
//! where `W_delta = w - (1/beta) ln(1 - delta)` and `D0_eps` is the
//! fractionally smoothed divergence of the initial state. All three sides
//! are computed independently here and cross-checked against exhaustive
//! counting in the oracle module.

use num_traits::{One, Zero};

use crate::arith::{Mode, Scalar};
use crate::divergence::{d0_exp, d0_smooth_fractional_exp};
use crate::error::{Error, Result};
use crate::majorization::beta_order;
use crate::system::{BathModel, DiagonalState, ThermalContext};

/// Work recorded in a battery, stored as the factor `e^(-beta * w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Work<M: Mode> {
    factor: M::Scalar,
}

impl<M: Mode> Work<M> {
    /// Wraps a Boltzmann factor; it must be positive and finite.
    pub fn from_factor(factor: M::Scalar) -> Result<Self> {
        let positive = factor > M::Scalar::zero();
        let finite = M::Scalar::EXACT || factor.to_f64().is_finite();
        if !positive || !finite {
            return Err(Error::NonPositiveWorkFactor {
                value: factor.to_string(),
            });
        }
        Ok(Work { factor })
    }

    /// Work equal to one energy step: `factor = e^(-beta * energy)`.
    pub fn from_energy(beta: &M::Beta, energy: &M::Energy) -> Self {
        Work {
            factor: M::boltzmann(beta, energy),
        }
    }

    /// Zero work (factor 1).
    pub fn zero() -> Self {
        Work {
            factor: M::Scalar::one(),
        }
    }

    pub fn factor(&self) -> &M::Scalar {
        &self.factor
    }

    /// Real work value `-ln(factor) / beta`.
    pub fn value(&self, beta: &M::Beta) -> f64 {
        -self.factor.to_f64().ln() / M::beta_value(beta)
    }
}

fn check_physical<M: Mode>(rho: &DiagonalState<M>) -> Result<()> {
    if !rho.is_physical() {
        return Err(Error::NotPhysical {
            total: rho.total_mass().to_string(),
        });
    }
    Ok(())
}

pub(crate) fn check_epsilon<S: Scalar>(epsilon: &S) -> Result<()> {
    if *epsilon < S::zero() || *epsilon >= S::one() {
        return Err(Error::EpsilonOutOfRange {
            value: epsilon.to_string(),
        });
    }
    Ok(())
}

pub(crate) fn check_delta<S: Scalar>(delta: &S) -> Result<()> {
    if *delta < S::zero() || *delta >= S::one() {
        return Err(Error::DeltaOutOfRange {
            value: delta.to_string(),
        });
    }
    Ok(())
}

/// Equality up to tolerance, scaled by magnitude; exact in exact mode.
fn balanced<S: Scalar>(a: &S, b: &S) -> bool {
    if S::EXACT {
        a == b
    } else {
        let diff = (a.clone() - b.clone()).abs();
        let mut scale = S::one();
        if a.abs() > scale {
            scale = a.abs();
        }
        if b.abs() > scale {
            scale = b.abs();
        }
        diff <= S::tol() * scale
    }
}

/// The unique work value a fully deterministic process can extract:
/// `w* = -(1/beta) ln(S / Z)` with `S` the support weight of `rho`.
pub fn deterministic_work<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
) -> Result<Work<M>> {
    check_physical(rho)?;
    Work::from_factor(d0_exp(rho, ctx)?)
}

/// Effective reverse-process work `W_delta = w - (1/beta) ln(1 - delta)`,
/// i.e. factor scaled by `1 - delta`.
pub fn w_delta<M: Mode>(work: &Work<M>, delta: &M::Scalar) -> Result<Work<M>> {
    check_delta(delta)?;
    Work::from_factor(work.factor.clone() * (M::Scalar::one() - delta.clone()))
}

/// Success probability of the forward process: exactly `1 - epsilon`.
pub fn forward_probability<S: Scalar>(epsilon: &S) -> Result<S> {
    check_epsilon(epsilon)?;
    Ok(S::one() - epsilon.clone())
}

/// Reverse-process success probability together with its feasibility.
#[derive(Clone, Debug, PartialEq)]
pub struct ReverseProbability<M: Mode> {
    probability: M::Scalar,
    feasible: bool,
}

impl<M: Mode> ReverseProbability<M> {
    pub fn probability(&self) -> &M::Scalar {
        &self.probability
    }

    /// False when the requested work exceeds what the reverse process can
    /// pay back, which surfaces as a probability above 1.
    pub fn is_feasible(&self) -> bool {
        self.feasible
    }
}

/// `(1 - epsilon) * exp(-beta * W_delta - D0_eps)`; values above 1 flag
/// the requested `w` as infeasible rather than erroring.
pub fn reverse_probability<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    work: &Work<M>,
    epsilon: &M::Scalar,
    delta: &M::Scalar,
) -> Result<ReverseProbability<M>> {
    check_physical(rho)?;
    check_epsilon(epsilon)?;
    let shifted = w_delta(work, delta)?;
    let smooth_exp = d0_smooth_fractional_exp(rho, ctx, epsilon)?;
    let probability =
        (M::Scalar::one() - epsilon.clone()) * shifted.factor.clone() / smooth_exp;
    let feasible = probability.approx_le(&M::Scalar::one());
    Ok(ReverseProbability {
        probability,
        feasible,
    })
}

/// Closed-form ratio `exp(beta * W_delta + D0_eps)` of forward to reverse
/// success probabilities.
pub fn fluctuation_ratio<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    work: &Work<M>,
    epsilon: &M::Scalar,
    delta: &M::Scalar,
) -> Result<M::Scalar> {
    check_physical(rho)?;
    check_epsilon(epsilon)?;
    let shifted = w_delta(work, delta)?;
    let smooth_exp = d0_smooth_fractional_exp(rho, ctx, epsilon)?;
    Ok(smooth_exp / shifted.factor)
}

/// Largest work extractable with failure probability at most `epsilon`:
/// `w_min = (1/beta)(-D0_eps + ln(1 - epsilon))`, the value at which the
/// reverse probability saturates 1.
pub fn epsilon_work_bound<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
) -> Result<Work<M>> {
    check_physical(rho)?;
    check_epsilon(epsilon)?;
    let smooth_exp = d0_smooth_fractional_exp(rho, ctx, epsilon)?;
    Work::from_factor(smooth_exp / (M::Scalar::one() - epsilon.clone()))
}

/// Work content of the thermal state itself under delta-smoothing:
/// `-(1/beta) ln(1 - delta)`, obtained by running the Gibbs state through
/// the ordinary smoothing machinery rather than by shortcut.
pub fn thermal_work_content<M: Mode>(
    ctx: &ThermalContext<M>,
    delta: &M::Scalar,
) -> Result<Work<M>> {
    check_delta(delta)?;
    Work::from_factor(d0_smooth_fractional_exp(ctx.gibbs(), ctx, delta)?)
}

/// Which corner the transport fill starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FillOrder {
    /// Rows in beta-order, columns in ascending energy.
    BetaOrdered,
    /// Both orders reversed; yields a second feasible matrix for
    /// result-independence checks.
    Reversed,
}

/// Microstate currents `k[i -> j]` from initial shells (rows) to final
/// shells (cols), with marginals pinned to the bath degeneracies.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionCurrentMatrix<M: Mode> {
    row_levels: Vec<usize>,
    col_levels: Vec<usize>,
    row_targets: Vec<M::Scalar>,
    col_targets: Vec<M::Scalar>,
    entries: Vec<Vec<M::Scalar>>,
    work: Work<M>,
}

impl<M: Mode> TransitionCurrentMatrix<M> {
    /// Canonical level indices of the rows, in fill order.
    pub fn row_levels(&self) -> &[usize] {
        &self.row_levels
    }

    /// Canonical level indices of the columns, in fill order.
    pub fn col_levels(&self) -> &[usize] {
        &self.col_levels
    }

    /// Bath degeneracy each row must sum to.
    pub fn row_targets(&self) -> &[M::Scalar] {
        &self.row_targets
    }

    /// Bath degeneracy each column must sum to.
    pub fn col_targets(&self) -> &[M::Scalar] {
        &self.col_targets
    }

    pub fn entries(&self) -> &[Vec<M::Scalar>] {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> &M::Scalar {
        &self.entries[row][col]
    }

    pub fn work(&self) -> &Work<M> {
        &self.work
    }

    pub fn row_sums(&self) -> Vec<M::Scalar> {
        self.entries
            .iter()
            .map(|row| row.iter().cloned().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<M::Scalar> {
        (0..self.col_levels.len())
            .map(|c| self.entries.iter().map(|row| row[c].clone()).sum())
            .collect()
    }
}

/// Least positive factor that makes every degeneracy target integral when
/// multiplied into the reference degeneracy. Always 1 in float mode.
pub fn minimal_integral_scale<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    bath: &BathModel<M>,
    work: &Work<M>,
) -> Result<M::Scalar> {
    let (_, _, targets) = degeneracy_targets(rho, ctx, bath, work)?;
    Ok(M::Scalar::integral_scale(&targets))
}

fn degeneracy_targets<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    bath: &BathModel<M>,
    work: &Work<M>,
) -> Result<(Vec<usize>, Vec<usize>, Vec<M::Scalar>)> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    if !bath.beta_matches(ctx.beta()) {
        return Err(Error::BetaMismatch);
    }
    let ordering = beta_order(rho, ctx)?;
    let row_levels: Vec<usize> = ordering
        .permutation()
        .iter()
        .copied()
        .filter(|&i| *rho.prob(i) > M::Scalar::zero())
        .collect();
    if row_levels.is_empty() {
        return Err(Error::EmptySupport);
    }
    let col_levels: Vec<usize> = (0..ctx.spectrum().len()).collect();
    let mut targets = Vec::with_capacity(row_levels.len() + col_levels.len());
    for &i in &row_levels {
        targets.push(bath.degeneracy(&ctx.spectrum().energy(i)));
    }
    for &j in &col_levels {
        targets.push(bath.degeneracy_scaled(&ctx.spectrum().energy(j), work.factor()));
    }
    Ok((row_levels, col_levels, targets))
}

/// Builds the canonical feasible current matrix by the northwest-corner
/// rule on beta-ordered targets.
pub fn build_transition_currents<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    bath: &BathModel<M>,
    work: &Work<M>,
) -> Result<TransitionCurrentMatrix<M>> {
    build_transition_currents_ordered(rho, ctx, bath, work, FillOrder::BetaOrdered)
}

/// Northwest-corner fill in the requested order. Any fill order gives the
/// same work distribution; the matrices themselves differ.
pub fn build_transition_currents_ordered<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    bath: &BathModel<M>,
    work: &Work<M>,
    order: FillOrder,
) -> Result<TransitionCurrentMatrix<M>> {
    let (mut row_levels, mut col_levels, targets) =
        degeneracy_targets(rho, ctx, bath, work)?;
    if order == FillOrder::Reversed {
        row_levels.reverse();
        col_levels.reverse();
    }
    let row_targets: Vec<M::Scalar> = row_levels
        .iter()
        .map(|&i| bath.degeneracy(&ctx.spectrum().energy(i)))
        .collect();
    let col_targets: Vec<M::Scalar> = col_levels
        .iter()
        .map(|&j| bath.degeneracy_scaled(&ctx.spectrum().energy(j), work.factor()))
        .collect();
    if M::Scalar::EXACT {
        for t in &targets {
            if !t.is_integral() {
                return Err(Error::NonIntegralTarget {
                    value: t.to_string(),
                });
            }
        }
    }
    let row_total: M::Scalar = row_targets.iter().cloned().sum();
    let col_total: M::Scalar = col_targets.iter().cloned().sum();
    if !balanced(&row_total, &col_total) {
        return Err(Error::InfeasibleTotals {
            rows: row_total.to_string(),
            cols: col_total.to_string(),
        });
    }
    let rows = row_levels.len();
    let cols = col_levels.len();
    let mut entries = vec![vec![M::Scalar::zero(); cols]; rows];
    let mut row_rem = row_targets.clone();
    let mut col_rem = col_targets.clone();
    let mut r = 0;
    let mut c = 0;
    while r < rows && c < cols {
        let k = if row_rem[r] <= col_rem[c] {
            row_rem[r].clone()
        } else {
            col_rem[c].clone()
        };
        entries[r][c] = k.clone();
        row_rem[r] = row_rem[r].clone() - k.clone();
        col_rem[c] = col_rem[c].clone() - k;
        // The smaller remainder hits exactly zero, so at least one index
        // always advances.
        let row_done = row_rem[r].is_zero();
        let col_done = col_rem[c].is_zero();
        if row_done {
            r += 1;
        }
        if col_done {
            c += 1;
        }
    }
    Ok(TransitionCurrentMatrix {
        row_levels,
        col_levels,
        row_targets,
        col_targets,
        entries,
        work: work.clone(),
    })
}

/// Battery outcome distribution: `(work, probability)` pairs plus the
/// failure branch.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkDistribution<M: Mode> {
    entries: Vec<(Work<M>, M::Scalar)>,
    failure: M::Scalar,
}

impl<M: Mode> WorkDistribution<M> {
    pub fn new(entries: Vec<(Work<M>, M::Scalar)>, failure: M::Scalar) -> Result<Self> {
        for (index, (_, p)) in entries.iter().enumerate() {
            if *p < M::Scalar::zero() {
                return Err(Error::NegativeProbability {
                    index,
                    value: p.to_string(),
                });
            }
        }
        if failure < M::Scalar::zero() {
            return Err(Error::NegativeProbability {
                index: entries.len(),
                value: failure.to_string(),
            });
        }
        let total: M::Scalar = entries.iter().map(|(_, p)| p.clone()).sum::<M::Scalar>()
            + failure.clone();
        if !total.approx_le(&M::Scalar::one()) {
            return Err(Error::NotPhysical {
                total: total.to_string(),
            });
        }
        Ok(WorkDistribution { entries, failure })
    }

    pub fn entries(&self) -> &[(Work<M>, M::Scalar)] {
        &self.entries
    }

    pub fn failure(&self) -> &M::Scalar {
        &self.failure
    }

    /// Probability of landing any work outcome at all.
    pub fn success_mass(&self) -> M::Scalar {
        self.entries.iter().map(|(_, p)| p.clone()).sum()
    }

    pub fn total_mass(&self) -> M::Scalar {
        self.success_mass() + self.failure.clone()
    }
}

/// Work distribution plus the final system state induced by a current
/// matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutcome<M: Mode> {
    distribution: WorkDistribution<M>,
    final_state: DiagonalState<M>,
}

impl<M: Mode> ForwardOutcome<M> {
    pub fn distribution(&self) -> &WorkDistribution<M> {
        &self.distribution
    }

    pub fn final_state(&self) -> &DiagonalState<M> {
        &self.final_state
    }
}

/// Pushes `rho` through the currents: each of the `k[i -> j]` microstates
/// carries probability `P(E_i) / g(E - E_i)`, and every one lands the
/// battery at the matrix's work value.
pub fn forward_distribution<M: Mode>(
    currents: &TransitionCurrentMatrix<M>,
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    bath: &BathModel<M>,
) -> Result<ForwardOutcome<M>> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    if !bath.beta_matches(ctx.beta()) {
        return Err(Error::BetaMismatch);
    }
    let mut support = rho.support();
    support.sort_unstable();
    let mut rows_sorted = currents.row_levels.to_vec();
    rows_sorted.sort_unstable();
    if support != rows_sorted {
        return Err(Error::MarginalMismatch);
    }
    let row_sums = currents.row_sums();
    for (r, &level) in currents.row_levels.iter().enumerate() {
        let expected = bath.degeneracy(&ctx.spectrum().energy(level));
        if !balanced(&row_sums[r], &expected) {
            return Err(Error::MarginalMismatch);
        }
    }
    let col_sums = currents.col_sums();
    for (c, &level) in currents.col_levels.iter().enumerate() {
        let expected =
            bath.degeneracy_scaled(&ctx.spectrum().energy(level), currents.work.factor());
        if !balanced(&col_sums[c], &expected) {
            return Err(Error::MarginalMismatch);
        }
    }
    let per_microstate: Vec<M::Scalar> = currents
        .row_levels
        .iter()
        .map(|&i| {
            rho.prob(i).clone()
                * bath.degeneracy(&ctx.spectrum().energy(i)).recip()
        })
        .collect();
    let mut success = M::Scalar::zero();
    let mut final_probs = vec![M::Scalar::zero(); ctx.spectrum().len()];
    for (r, row) in currents.entries.iter().enumerate() {
        for (c, k) in row.iter().enumerate() {
            let flow = k.clone() * per_microstate[r].clone();
            success = success + flow.clone();
            let j = currents.col_levels[c];
            final_probs[j] = final_probs[j].clone() + flow;
        }
    }
    let mut failure = M::Scalar::one() - success.clone();
    if failure < M::Scalar::zero() && failure.abs() <= M::Scalar::tol() {
        failure = M::Scalar::zero();
    }
    let distribution =
        WorkDistribution::new(vec![(currents.work.clone(), success)], failure)?;
    let final_state = DiagonalState::new(rho.spectrum().clone(), final_probs)?;
    Ok(ForwardOutcome {
        distribution,
        final_state,
    })
}
