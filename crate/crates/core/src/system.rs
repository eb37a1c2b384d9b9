//! Finite level systems and their thermal environment.
//!
//! An [`EnergySpectrum`] is a finite list of levels stored in ascending
//! energy order; degenerate levels are expressed by repeating an energy.
//! A [`DiagonalState`] is a probability assignment over those levels.
//! A [`ThermalContext`] fixes the inverse temperature and precomputes the
//! Boltzmann weights, partition function, and Gibbs state. A [`BathModel`]
//! is the exponential density-of-states family `g(dE) = G * e^(-beta*dE)`.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::arith::{Energy as _, Mode, Scalar};
use crate::error::{Error, Result};

/// Ascending list of energy levels with the input order retained.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergySpectrum<M: Mode> {
    energies: Vec<M::Energy>,
    /// `original_indices[k]` is the input position of canonical level `k`.
    original_indices: Vec<usize>,
}

impl<M: Mode> EnergySpectrum<M> {
    /// Sorts the levels ascending; the sort is stable, so levels with equal
    /// energy keep their input order.
    pub fn new(energies: Vec<M::Energy>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        for (index, e) in energies.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::NonFiniteEnergy { index });
            }
        }
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted = order.iter().map(|&i| energies[i]).collect();
        Ok(Self {
            energies: sorted,
            original_indices: order,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Energies in canonical (ascending) order.
    pub fn energies(&self) -> &[M::Energy] {
        &self.energies
    }

    pub fn energy(&self, level: usize) -> M::Energy {
        self.energies[level]
    }

    /// Input position of canonical level `level`.
    pub fn original_index(&self, level: usize) -> usize {
        self.original_indices[level]
    }

    /// Reorders per-level values given in input order into canonical order.
    pub fn from_input_order<T: Clone>(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(self
            .original_indices
            .iter()
            .map(|&i| values[i].clone())
            .collect())
    }
}

/// Probability assignment over the levels of a shared spectrum.
///
/// The mass may be below 1: smoothing produces subnormalized states on
/// purpose. [`DiagonalState::is_physical`] reports whether the mass is 1
/// within the mode's tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalState<M: Mode> {
    spectrum: Arc<EnergySpectrum<M>>,
    probs: Vec<M::Scalar>,
}

impl<M: Mode> DiagonalState<M> {
    /// `probs` aligned with the spectrum's canonical order.
    pub fn new(spectrum: Arc<EnergySpectrum<M>>, probs: Vec<M::Scalar>) -> Result<Self> {
        if probs.len() != spectrum.len() {
            return Err(Error::LengthMismatch {
                expected: spectrum.len(),
                got: probs.len(),
            });
        }
        let mut clean = Vec::with_capacity(probs.len());
        for (index, p) in probs.into_iter().enumerate() {
            if !p.to_f64().is_finite() {
                return Err(Error::NonFiniteProbability { index });
            }
            if p < M::Scalar::zero() {
                if (-p.clone()) <= M::Scalar::tol() {
                    clean.push(M::Scalar::zero());
                    continue;
                }
                return Err(Error::NegativeProbability {
                    index,
                    value: p.to_string(),
                });
            }
            clean.push(p);
        }
        Ok(Self {
            spectrum,
            probs: clean,
        })
    }

    /// `probs` aligned with the order the energies were first listed in.
    pub fn from_input_order(
        spectrum: Arc<EnergySpectrum<M>>,
        probs: &[M::Scalar],
    ) -> Result<Self> {
        let canonical = spectrum.from_input_order(probs)?;
        Self::new(spectrum, canonical)
    }

    pub fn spectrum(&self) -> &Arc<EnergySpectrum<M>> {
        &self.spectrum
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[M::Scalar] {
        &self.probs
    }

    pub fn prob(&self, level: usize) -> &M::Scalar {
        &self.probs[level]
    }

    pub fn total_mass(&self) -> M::Scalar {
        self.probs.iter().cloned().sum()
    }

    /// Mass equals 1 within the mode's tolerance.
    pub fn is_physical(&self) -> bool {
        self.total_mass().approx_eq(&M::Scalar::one())
    }

    /// Canonical indices of levels with strictly positive probability.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > M::Scalar::zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn same_spectrum(&self, other: &Arc<EnergySpectrum<M>>) -> bool {
        Arc::ptr_eq(&self.spectrum, other) || *self.spectrum == **other
    }
}

/// Inverse temperature plus everything derived from it: Boltzmann weights,
/// partition function, and the Gibbs state.
#[derive(Clone, Debug)]
pub struct ThermalContext<M: Mode> {
    spectrum: Arc<EnergySpectrum<M>>,
    beta: M::Beta,
    weights: Vec<M::Scalar>,
    partition: M::Scalar,
    gibbs: DiagonalState<M>,
}

impl<M: Mode> ThermalContext<M> {
    pub fn new(spectrum: Arc<EnergySpectrum<M>>, beta: M::Beta) -> Result<Self> {
        if !M::beta_value(&beta).is_finite() || M::beta_value(&beta) <= 0.0 {
            return Err(Error::NonPositiveBeta);
        }
        let weights: Vec<M::Scalar> = spectrum
            .energies()
            .iter()
            .map(|e| M::boltzmann(&beta, e))
            .collect();
        let partition: M::Scalar = weights.iter().cloned().sum();
        if !(partition > M::Scalar::zero()) {
            return Err(Error::NonPositiveBeta);
        }
        let gibbs_probs: Vec<M::Scalar> = weights
            .iter()
            .map(|w| w.clone() / partition.clone())
            .collect();
        let gibbs = DiagonalState::new(Arc::clone(&spectrum), gibbs_probs)?;
        Ok(Self {
            spectrum,
            beta,
            weights,
            partition,
            gibbs,
        })
    }

    pub fn spectrum(&self) -> &Arc<EnergySpectrum<M>> {
        &self.spectrum
    }

    pub fn beta(&self) -> &M::Beta {
        &self.beta
    }

    pub fn beta_value(&self) -> f64 {
        M::beta_value(&self.beta)
    }

    /// Boltzmann weights `e^(-beta*E_i)` in canonical order.
    pub fn weights(&self) -> &[M::Scalar] {
        &self.weights
    }

    pub fn weight(&self, level: usize) -> &M::Scalar {
        &self.weights[level]
    }

    /// Partition function `Z`.
    pub fn partition(&self) -> &M::Scalar {
        &self.partition
    }

    pub fn gibbs(&self) -> &DiagonalState<M> {
        &self.gibbs
    }

    pub fn same_spectrum(&self, other: &Arc<EnergySpectrum<M>>) -> bool {
        Arc::ptr_eq(&self.spectrum, other) || *self.spectrum == **other
    }
}

/// Exponential density-of-states bath: `g(dE) = G * e^(-beta*dE)`.
///
/// `G` sets the microstate count at the reference energy and cancels out
/// of every probability; it only has to be large enough to make the
/// relevant degeneracies whole numbers in exact mode.
#[derive(Clone, Debug, PartialEq)]
pub struct BathModel<M: Mode> {
    beta: M::Beta,
    reference_degeneracy: M::Scalar,
}

impl<M: Mode> BathModel<M> {
    pub fn new(beta: M::Beta, reference_degeneracy: M::Scalar) -> Result<Self> {
        if !(reference_degeneracy > M::Scalar::zero()) {
            return Err(Error::NonPositiveDegeneracy {
                value: reference_degeneracy.to_string(),
            });
        }
        Ok(Self {
            beta,
            reference_degeneracy,
        })
    }

    pub fn beta(&self) -> &M::Beta {
        &self.beta
    }

    pub fn reference_degeneracy(&self) -> &M::Scalar {
        &self.reference_degeneracy
    }

    /// `g(delta_e) = G * e^(-beta * delta_e)`.
    pub fn degeneracy(&self, delta_e: &M::Energy) -> M::Scalar {
        self.reference_degeneracy.clone() * M::boltzmann(&self.beta, delta_e)
    }

    /// `g(delta_e) * factor`; used for work-shifted shells where the shift
    /// is carried as a Boltzmann factor rather than an energy.
    pub fn degeneracy_scaled(&self, delta_e: &M::Energy, factor: &M::Scalar) -> M::Scalar {
        self.degeneracy(delta_e) * factor.clone()
    }

    /// Same bath with `G` multiplied by `k`.
    pub fn scaled(&self, k: &M::Scalar) -> Result<Self> {
        Self::new(
            self.beta.clone(),
            self.reference_degeneracy.clone() * k.clone(),
        )
    }

    pub fn beta_matches(&self, other: &M::Beta) -> bool {
        M::beta_eq(&self.beta, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{Exact, Float, LnRatio};
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        <BigRational as Scalar>::from_ratio(n, d)
    }

    fn ln2() -> LnRatio {
        LnRatio::from_ints(2, 1).unwrap()
    }

    fn ctx(energies: Vec<i64>) -> ThermalContext<Exact> {
        let spec = Arc::new(EnergySpectrum::<Exact>::new(energies).unwrap());
        ThermalContext::new(spec, ln2()).unwrap()
    }

    #[test]
    fn single_level_context_is_trivial() {
        let c = ctx(vec![0]);
        assert_eq!(c.partition(), &rat(1, 1));
        assert_eq!(c.gibbs().probs(), &[rat(1, 1)]);
    }

    #[test]
    fn three_level_context() {
        let c = ctx(vec![0, 1, 2]);
        assert_eq!(c.partition(), &rat(7, 4));
        assert_eq!(c.gibbs().probs(), &[rat(4, 7), rat(2, 7), rat(1, 7)]);
    }

    #[test]
    fn two_level_context() {
        let c = ctx(vec![0, 1]);
        assert_eq!(c.partition(), &rat(3, 2));
        assert_eq!(c.gibbs().probs(), &[rat(2, 3), rat(1, 3)]);
    }

    #[test]
    fn spectrum_sorts_and_keeps_input_positions() {
        let spec = EnergySpectrum::<Exact>::new(vec![2, 0, 1]).unwrap();
        assert_eq!(spec.energies(), &[0, 1, 2]);
        assert_eq!(spec.original_index(0), 1);
        assert_eq!(spec.original_index(1), 2);
        assert_eq!(spec.original_index(2), 0);
    }

    #[test]
    fn repeated_levels_express_degeneracy() {
        let spec = EnergySpectrum::<Exact>::new(vec![1, 0, 0]).unwrap();
        assert_eq!(spec.energies(), &[0, 0, 1]);
        // Stable sort: the two zero levels keep input order 1 then 2.
        assert_eq!(spec.original_index(0), 1);
        assert_eq!(spec.original_index(1), 2);
    }

    #[test]
    fn gibbs_invariant_under_input_permutation() {
        let a = ctx(vec![0, 1, 2]);
        let b = ctx(vec![2, 1, 0]);
        assert_eq!(a.gibbs().probs(), b.gibbs().probs());
    }

    #[test]
    fn gibbs_weights_decrease_with_energy() {
        let c = ctx(vec![0, 0, 1, 3]);
        let g = c.gibbs().probs();
        assert_eq!(g[0], g[1]);
        assert!(g[1] > g[2]);
        assert!(g[2] > g[3]);
    }

    #[test]
    fn state_from_input_order_follows_spectrum_permutation() {
        let spec = Arc::new(EnergySpectrum::<Exact>::new(vec![2, 0, 1]).unwrap());
        let rho =
            DiagonalState::from_input_order(spec, &[rat(1, 2), rat(1, 3), rat(1, 6)]).unwrap();
        // Input listed probabilities for energies (2, 0, 1).
        assert_eq!(rho.probs(), &[rat(1, 3), rat(1, 6), rat(1, 2)]);
    }

    #[test]
    fn state_validation() {
        let spec = Arc::new(EnergySpectrum::<Exact>::new(vec![0, 1]).unwrap());
        assert!(matches!(
            DiagonalState::new(Arc::clone(&spec), vec![rat(1, 2)]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            DiagonalState::new(Arc::clone(&spec), vec![rat(-1, 2), rat(3, 2)]),
            Err(Error::NegativeProbability { .. })
        ));
        let sub = DiagonalState::new(spec, vec![rat(1, 2), rat(1, 4)]).unwrap();
        assert!(!sub.is_physical());
        assert_eq!(sub.total_mass(), rat(3, 4));
        assert_eq!(sub.support(), vec![0, 1]);
    }

    #[test]
    fn float_state_clamps_tiny_negative() {
        let spec = Arc::new(EnergySpectrum::<Float>::new(vec![0.0, 1.0]).unwrap());
        let rho = DiagonalState::new(spec, vec![1.0, -1e-15]).unwrap();
        assert_eq!(rho.prob(1), &0.0);
        assert_eq!(rho.support(), vec![0]);
    }

    #[test]
    fn empty_spectrum_rejected() {
        assert!(matches!(
            EnergySpectrum::<Exact>::new(vec![]),
            Err(Error::EmptySpectrum)
        ));
    }

    #[test]
    fn bath_degeneracy_examples() {
        let bath = BathModel::<Exact>::new(ln2(), rat(12, 1)).unwrap();
        assert_eq!(bath.degeneracy(&0), rat(12, 1));
        assert_eq!(bath.degeneracy(&1), rat(6, 1));
        // dE = log2(3/2) carried as the factor e^(-beta*dE) = 2/3.
        assert_eq!(bath.degeneracy_scaled(&0, &rat(2, 3)), rat(8, 1));
    }

    #[test]
    fn bath_degeneracy_float_fractional_energy() {
        let bath = BathModel::<Float>::new(2.0f64.ln(), 12.0).unwrap();
        let d = bath.degeneracy(&1.5f64.log2());
        assert!((d - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bath_group_property() {
        let bath = BathModel::<Exact>::new(ln2(), rat(12, 1)).unwrap();
        for d1 in -2..4i64 {
            for d2 in -2..4i64 {
                let lhs = bath.degeneracy(&(d1 + d2)) * rat(12, 1);
                let rhs = bath.degeneracy(&d1) * bath.degeneracy(&d2);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn bath_rejects_nonpositive_reference() {
        assert!(BathModel::<Exact>::new(ln2(), rat(0, 1)).is_err());
        assert!(BathModel::<Exact>::new(ln2(), rat(-3, 1)).is_err());
    }
}
