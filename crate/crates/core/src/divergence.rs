//! Renyi-0 divergence to the Gibbs state, and its smoothed variants.
//!
//! Sign convention: `d0 = ln(S / Z)` where `S` is the Boltzmann weight of
//! the state's support, so `d0 <= 0` with equality at full support. The
//! opposite (nonnegative) sign is exposed as [`d0_textbook`].
//!
//! Two smoothings of radius `epsilon` are provided and differ numerically:
//!
//! * [`smooth`] / [`d0_smooth_fractional`]: keep the maximal beta-ordered
//!   prefix of mass at most `1 - epsilon` plus a fractional share of the
//!   boundary level. This is the variant the fluctuation-ratio identity
//!   uses, and it equals the optimum when partial level removal is scored
//!   by the removed fraction of the level's weight.
//! * [`d0_smooth_integral`]: minimize the kept support weight over
//!   whole-level removals of total mass at most `epsilon`. Partial mass
//!   reduction never shrinks a support, so this is the exact optimum over
//!   the epsilon-ball of subnormalized states.
//!
//! Exact-mode identities are checked on the exponentials `S / Z`, which
//! stay rational; the `*_exp` functions return those.

use num_traits::{One, Zero};

use crate::arith::{Mode, Scalar};
use crate::error::{Error, Result};
use crate::majorization::beta_order;
use crate::system::{DiagonalState, ThermalContext};

/// Outcome of fractional smoothing.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingResult<M: Mode> {
    kept_count: usize,
    boundary_level: Option<usize>,
    fraction: M::Scalar,
    removed_weight: M::Scalar,
    support_weight: M::Scalar,
    smoothed_state: DiagonalState<M>,
}

impl<M: Mode> SmoothingResult<M> {
    /// Number of beta-ordered support levels kept in full.
    pub fn kept_count(&self) -> usize {
        self.kept_count
    }

    /// Canonical index of the fractionally kept level, if any.
    pub fn boundary_level(&self) -> Option<usize> {
        self.boundary_level
    }

    /// Retained fraction of the boundary level's probability (0 when none).
    pub fn fraction(&self) -> &M::Scalar {
        &self.fraction
    }

    /// Probability mass actually removed; at most `epsilon`.
    pub fn removed_weight(&self) -> &M::Scalar {
        &self.removed_weight
    }

    /// Effective support weight `S`: full Boltzmann weights of the kept
    /// prefix plus the boundary fraction of the next one.
    pub fn support_weight(&self) -> &M::Scalar {
        &self.support_weight
    }

    pub fn smoothed_state(&self) -> &DiagonalState<M> {
        &self.smoothed_state
    }
}

/// Beta-ordered fractional smoothing: keeps mass `min(mass, 1 - epsilon)`,
/// dropping weight from the low-rescaled-weight end first.
pub fn smooth<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
) -> Result<SmoothingResult<M>> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    let mass = rho.total_mass();
    if *epsilon < M::Scalar::zero() || *epsilon >= mass {
        return Err(Error::EpsilonOutOfRange {
            value: epsilon.to_string(),
        });
    }
    let kept = M::Scalar::one() - epsilon.clone();
    let target = if mass < kept { mass.clone() } else { kept };
    let order = beta_order(rho, ctx)?;

    let mut probs = vec![M::Scalar::zero(); rho.len()];
    let mut kept_count = 0usize;
    let mut boundary_level = None;
    let mut fraction = M::Scalar::zero();
    let mut support_weight = M::Scalar::zero();
    let mut acc = M::Scalar::zero();
    for &level in order.permutation() {
        let p = rho.prob(level).clone();
        if p == M::Scalar::zero() {
            break;
        }
        if acc.clone() + p.clone() <= target {
            acc = acc + p.clone();
            probs[level] = p;
            support_weight = support_weight + ctx.weight(level).clone();
            kept_count += 1;
            if acc == target {
                break;
            }
        } else {
            let remainder = target.clone() - acc.clone();
            if remainder > M::Scalar::zero() {
                fraction = remainder.clone() / p;
                probs[level] = remainder;
                support_weight =
                    support_weight + fraction.clone() * ctx.weight(level).clone();
                boundary_level = Some(level);
            }
            break;
        }
    }
    let smoothed_state = DiagonalState::new(rho.spectrum().clone(), probs)?;
    Ok(SmoothingResult {
        kept_count,
        boundary_level,
        fraction,
        removed_weight: mass - target,
        support_weight,
        smoothed_state,
    })
}

/// `e^(d0) = S / Z` where `S` is the support's Boltzmann weight.
pub fn d0_exp<M: Mode>(rho: &DiagonalState<M>, ctx: &ThermalContext<M>) -> Result<M::Scalar> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    let support = rho.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let s: M::Scalar = support.iter().map(|&i| ctx.weight(i).clone()).sum();
    Ok(s / ctx.partition().clone())
}

/// Renyi-0 divergence `ln(S / Z) <= 0`.
pub fn d0<M: Mode>(rho: &DiagonalState<M>, ctx: &ThermalContext<M>) -> Result<f64> {
    Ok(d0_exp(rho, ctx)?.to_f64().ln())
}

/// The nonnegative sign convention `-ln(S / Z)`.
pub fn d0_textbook<M: Mode>(rho: &DiagonalState<M>, ctx: &ThermalContext<M>) -> Result<f64> {
    Ok(-d0(rho, ctx)?)
}

/// `e^(D0^eps)` for the fractional smoothing: `S(eps) / Z`.
pub fn d0_smooth_fractional_exp<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
) -> Result<M::Scalar> {
    let result = smooth(rho, ctx, epsilon)?;
    Ok(result.support_weight().clone() / ctx.partition().clone())
}

/// Fractionally smoothed divergence `ln(S(eps) / Z)`.
pub fn d0_smooth_fractional<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
) -> Result<f64> {
    Ok(d0_smooth_fractional_exp(rho, ctx, epsilon)?.to_f64().ln())
}

/// `e^(D0^eps)` for the whole-level smoothing: the minimum kept support
/// weight over removals of total mass at most `epsilon`, divided by `Z`.
pub fn d0_smooth_integral_exp<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
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
    // Knapsack: maximize removed Boltzmann weight subject to removed
    // probability at most epsilon. Branch and bound over items in
    // decreasing weight-per-probability order, pruned by the fractional
    // relaxation.
    let mut items: Vec<(M::Scalar, M::Scalar)> = support
        .iter()
        .map(|&i| (ctx.weight(i).clone(), rho.prob(i).clone()))
        .collect();
    items.sort_by(|a, b| {
        // v_a/c_a vs v_b/c_b by cross-multiplication; costs are positive.
        let lhs = a.0.clone() * b.1.clone();
        let rhs = b.0.clone() * a.1.clone();
        rhs.partial_cmp(&lhs).expect("weights are finite")
    });
    let total: M::Scalar = items.iter().map(|(v, _)| v.clone()).sum();
    // Greedy incumbent: take every item that still fits.
    let mut best = {
        let mut budget = epsilon.clone();
        let mut value = M::Scalar::zero();
        for (v, c) in &items {
            if *c <= budget {
                budget = budget - c.clone();
                value = value + v.clone();
            }
        }
        value
    };
    fn search<K: Scalar>(
        items: &[(K, K)],
        idx: usize,
        budget: K,
        value: K,
        best: &mut K,
    ) {
        if value > *best {
            *best = value.clone();
        }
        if idx == items.len() {
            return;
        }
        // Fractional relaxation bound from idx onward.
        let mut bound = value.clone();
        let mut left = budget.clone();
        for (v, c) in &items[idx..] {
            if left <= K::zero() {
                break;
            }
            if *c <= left {
                left = left - c.clone();
                bound = bound + v.clone();
            } else {
                bound = bound + v.clone() * left.clone() / c.clone();
                left = K::zero();
            }
        }
        if bound <= *best {
            return;
        }
        let (v, c) = items[idx].clone();
        if c <= budget {
            search(
                items,
                idx + 1,
                budget.clone() - c,
                value.clone() + v,
                best,
            );
        }
        search(items, idx + 1, budget, value, best);
    }
    search(&items, 0, epsilon.clone(), M::Scalar::zero(), &mut best);
    let kept = total - best;
    Ok(kept / ctx.partition().clone())
}

/// Whole-level smoothed divergence `ln(S_opt / Z)`.
pub fn d0_smooth_integral<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
    epsilon: &M::Scalar,
) -> Result<f64> {
    Ok(d0_smooth_integral_exp(rho, ctx, epsilon)?.to_f64().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{Exact, Float, LnRatio};
    use num_rational::BigRational;
    use std::sync::Arc;
    use crate::system::EnergySpectrum;

    fn rat(n: i64, d: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(n, d)
    }

    fn setup(energies: Vec<i64>) -> (Arc<EnergySpectrum<Exact>>, ThermalContext<Exact>) {
        let spec = Arc::new(EnergySpectrum::new(energies).unwrap());
        let ctx =
            ThermalContext::new(Arc::clone(&spec), LnRatio::from_ints(2, 1).unwrap()).unwrap();
        (spec, ctx)
    }

    fn running_example() -> (ThermalContext<Exact>, DiagonalState<Exact>) {
        let (spec, ctx) = setup(vec![0, 1, 2]);
        let rho =
            DiagonalState::new(spec, vec![rat(1, 2), rat(3, 10), rat(1, 5)]).unwrap();
        (ctx, rho)
    }

    #[test]
    fn d0_zero_at_full_support() {
        let (ctx, rho) = running_example();
        assert_eq!(d0_exp(&rho, &ctx).unwrap(), rat(1, 1));
        assert_eq!(d0(&rho, &ctx).unwrap(), 0.0);
    }

    #[test]
    fn d0_of_pure_ground_state() {
        let (spec, ctx) = setup(vec![0, 1]);
        let pure = DiagonalState::new(spec, vec![rat(1, 1), rat(0, 1)]).unwrap();
        assert_eq!(d0_exp(&pure, &ctx).unwrap(), rat(2, 3));
        let v = d0(&pure, &ctx).unwrap();
        assert!((v + 1.5f64.ln()).abs() < 1e-15);
        assert!((d0_textbook(&pure, &ctx).unwrap() - 1.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn fractional_smoothing_survives_float_mass_dust() {
        // The masses sum to just under 1.0 in binary; epsilon must still
        // shrink the target instead of being absorbed by the dust.
        let spec = Arc::new(EnergySpectrum::<Float>::new(vec![0.0, 2.0, 5.0]).unwrap());
        let ctx = ThermalContext::new(Arc::clone(&spec), 2f64.ln()).unwrap();
        let rho =
            DiagonalState::new(spec, vec![2.0 / 3.0, 1.0 / 9.0, 2.0 / 9.0]).unwrap();
        assert!(rho.total_mass() < 1.0);
        let s = d0_smooth_fractional_exp(&rho, &ctx, &0.1).unwrap();
        assert!((s - 169.0 / 205.0).abs() < 1e-14);
    }

    #[test]
    fn d0_requires_support() {
        let (spec, ctx) = setup(vec![0, 1]);
        let zero = DiagonalState::new(spec, vec![rat(0, 1), rat(0, 1)]).unwrap();
        assert!(matches!(d0_exp(&zero, &ctx), Err(Error::EmptySupport)));
    }

    #[test]
    fn smooth_running_example() {
        let (ctx, rho) = running_example();
        let s = smooth(&rho, &ctx, &rat(1, 10)).unwrap();
        assert_eq!(s.kept_count(), 2);
        assert_eq!(s.boundary_level(), Some(0));
        assert_eq!(s.fraction(), &rat(4, 5));
        assert_eq!(s.support_weight(), &rat(31, 20));
        assert_eq!(s.removed_weight(), &rat(1, 10));
        assert_eq!(
            s.smoothed_state().probs(),
            &[rat(2, 5), rat(3, 10), rat(1, 5)]
        );
        assert_eq!(s.smoothed_state().total_mass(), rat(9, 10));
    }

    #[test]
    fn smooth_with_zero_epsilon_keeps_support() {
        let (ctx, rho) = running_example();
        let s = smooth(&rho, &ctx, &rat(0, 1)).unwrap();
        assert_eq!(s.kept_count(), 3);
        assert_eq!(s.boundary_level(), None);
        assert_eq!(s.fraction(), &rat(0, 1));
        assert_eq!(s.support_weight(), &rat(7, 4));
        assert_eq!(s.smoothed_state(), &rho);
    }

    #[test]
    fn smooth_single_level() {
        let (spec, ctx) = setup(vec![0]);
        let rho = DiagonalState::new(spec, vec![rat(1, 1)]).unwrap();
        let s = smooth(&rho, &ctx, &rat(1, 5)).unwrap();
        assert_eq!(s.kept_count(), 0);
        assert_eq!(s.boundary_level(), Some(0));
        assert_eq!(s.fraction(), &rat(4, 5));
        assert_eq!(s.support_weight(), &rat(4, 5));
    }

    #[test]
    fn smooth_at_exact_boundary_excludes_next_level() {
        let (ctx, rho) = running_example();
        // Kept mass 1/2 is exactly the cumulative mass of the first two
        // beta-ordered levels; the third contributes nothing.
        let s = smooth(&rho, &ctx, &rat(1, 2)).unwrap();
        assert_eq!(s.kept_count(), 2);
        assert_eq!(s.boundary_level(), None);
        assert_eq!(s.fraction(), &rat(0, 1));
        assert_eq!(s.support_weight(), &rat(3, 4));
    }

    #[test]
    fn smooth_rejects_bad_epsilon() {
        let (ctx, rho) = running_example();
        assert!(matches!(
            smooth(&rho, &ctx, &rat(-1, 10)),
            Err(Error::EpsilonOutOfRange { .. })
        ));
        assert!(matches!(
            smooth(&rho, &ctx, &rat(1, 1)),
            Err(Error::EpsilonOutOfRange { .. })
        ));
    }

    #[test]
    fn smooth_subnormalized_input_removes_down_to_target() {
        let (spec, ctx) = setup(vec![0, 1]);
        let sub = DiagonalState::new(spec, vec![rat(1, 2), rat(1, 4)]).unwrap();
        // Mass 3/4 is already below 1 - 1/10, so nothing is removed.
        let s = smooth(&sub, &ctx, &rat(1, 10)).unwrap();
        assert_eq!(s.removed_weight(), &rat(0, 1));
        assert_eq!(s.smoothed_state().total_mass(), rat(3, 4));
    }

    #[test]
    fn fractional_divergence_running_example() {
        let (ctx, rho) = running_example();
        assert_eq!(
            d0_smooth_fractional_exp(&rho, &ctx, &rat(1, 10)).unwrap(),
            rat(31, 35)
        );
        let v = d0_smooth_fractional(&rho, &ctx, &rat(1, 10)).unwrap();
        assert!((v - (31f64 / 35f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn fractional_divergence_reduces_to_d0_at_zero() {
        let (ctx, rho) = running_example();
        assert_eq!(
            d0_smooth_fractional_exp(&rho, &ctx, &rat(0, 1)).unwrap(),
            d0_exp(&rho, &ctx).unwrap()
        );
    }

    #[test]
    fn gibbs_fractional_smoothing_is_one_minus_epsilon() {
        for energies in [vec![0], vec![0, 1], vec![0, 1, 2, 5], vec![0, 0, 3]] {
            let (_, ctx) = setup(energies);
            for eps in [rat(1, 10), rat(1, 2), rat(3, 4)] {
                let got =
                    d0_smooth_fractional_exp(ctx.gibbs(), &ctx, &eps).unwrap();
                assert_eq!(got, rat(1, 1) - eps);
            }
        }
    }

    #[test]
    fn integral_divergence_examples() {
        let (ctx, rho) = running_example();
        // No single support level fits in 1/10.
        assert_eq!(
            d0_smooth_integral_exp(&rho, &ctx, &rat(1, 10)).unwrap(),
            rat(1, 1)
        );
        // Level at energy 2 (mass 1/5) fits in 1/4.
        assert_eq!(
            d0_smooth_integral_exp(&rho, &ctx, &rat(1, 4)).unwrap(),
            rat(6, 7)
        );
        // The ground level (mass 1/2) fits in 1/2 and carries weight 1.
        assert_eq!(
            d0_smooth_integral_exp(&rho, &ctx, &rat(1, 2)).unwrap(),
            rat(3, 7)
        );
        assert_eq!(
            d0_smooth_integral_exp(&rho, &ctx, &rat(0, 1)).unwrap(),
            rat(1, 1)
        );
    }

    #[test]
    fn integral_optimum_can_skip_a_blocking_level() {
        // Contiguous beta-suffix removal would drop only the ground level
        // (mass 1/5); the optimum also drops the energy-2 level.
        let (spec, ctx) = setup(vec![0, 0, 2, 6]);
        let rho = DiagonalState::new(
            spec,
            vec![rat(1, 5), rat(1, 4), rat(3, 64), rat(161, 320)],
        )
        .unwrap();
        let got = d0_smooth_integral_exp(&rho, &ctx, &rat(1, 4)).unwrap();
        let z = ctx.partition().clone();
        let kept = rat(1, 1) + rat(1, 64); // levels with mass 1/4 and 161/320
        assert_eq!(got, kept / z);
    }

    #[test]
    fn fractional_never_exceeds_integral() {
        let (ctx, rho) = running_example();
        for eps in [rat(1, 10), rat(1, 4), rat(2, 5), rat(1, 2), rat(7, 10)] {
            let f = d0_smooth_fractional_exp(&rho, &ctx, &eps).unwrap();
            let i = d0_smooth_integral_exp(&rho, &ctx, &eps).unwrap();
            assert!(f <= i, "eps {eps}: fractional {f} > integral {i}");
        }
    }

    #[test]
    fn smoothed_divergences_non_increasing_in_epsilon() {
        let (ctx, rho) = running_example();
        let grid: Vec<BigRational> = (0..9).map(|k| rat(k, 10)).collect();
        let mut prev_f: Option<BigRational> = None;
        let mut prev_i: Option<BigRational> = None;
        for eps in &grid {
            let f = d0_smooth_fractional_exp(&rho, &ctx, eps).unwrap();
            let i = d0_smooth_integral_exp(&rho, &ctx, eps).unwrap();
            if let Some(p) = prev_f {
                assert!(f <= p);
            }
            if let Some(p) = prev_i {
                assert!(i <= p);
            }
            prev_f = Some(f);
            prev_i = Some(i);
        }
    }
}
