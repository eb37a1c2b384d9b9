//! Beta-ordering and thermo-majorization curves.
//!
//! The beta-order sorts levels by decreasing rescaled weight
//! `P(E_i) * e^(beta*E_i)`. Plotting cumulative probability against
//! cumulative Boltzmann weight in that order gives a concave
//! piecewise-linear curve from `(0, 0)` to `(Z, mass)`; one state can be
//! mapped to another by a thermal process exactly when its curve lies
//! nowhere below the other's.

use num_traits::Zero;

use crate::arith::{Mode, Scalar};
use crate::error::{Error, Result};
use crate::system::{DiagonalState, ThermalContext};

/// Level order of decreasing rescaled weight.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaOrdering<M: Mode> {
    permutation: Vec<usize>,
    rescaled_weights: Vec<M::Scalar>,
}

impl<M: Mode> BetaOrdering<M> {
    /// Canonical level index at each position, highest rescaled weight first.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Rescaled weights `P(E_i) * e^(beta*E_i)` in permutation order.
    pub fn rescaled_weights(&self) -> &[M::Scalar] {
        &self.rescaled_weights
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }
}

/// Sorts levels by decreasing `P(E_i) * e^(beta*E_i)`.
///
/// Ties break toward ascending energy, then ascending original input
/// index; both collapse to ascending canonical index because the spectrum
/// sort is stable.
pub fn beta_order<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
) -> Result<BetaOrdering<M>> {
    if !rho.same_spectrum(ctx.spectrum()) {
        return Err(Error::SpectrumMismatch);
    }
    let rescaled: Vec<M::Scalar> = rho
        .probs()
        .iter()
        .zip(ctx.weights())
        .map(|(p, w)| p.clone() * w.recip())
        .collect();
    let mut permutation: Vec<usize> = (0..rho.len()).collect();
    permutation.sort_by(|&a, &b| {
        rescaled[b]
            .partial_cmp(&rescaled[a])
            .expect("rescaled weights are finite")
            .then(a.cmp(&b))
    });
    let rescaled_weights = permutation.iter().map(|&i| rescaled[i].clone()).collect();
    Ok(BetaOrdering {
        permutation,
        rescaled_weights,
    })
}

/// Piecewise-linear curve through cumulative (Boltzmann weight,
/// probability) points in beta-order, prefixed with the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorizationCurve<M: Mode> {
    breakpoints: Vec<(M::Scalar, M::Scalar)>,
}

impl<M: Mode> MajorizationCurve<M> {
    pub fn breakpoints(&self) -> &[(M::Scalar, M::Scalar)] {
        &self.breakpoints
    }

    /// Total width: the partition function `Z`.
    pub fn width(&self) -> &M::Scalar {
        &self.breakpoints[self.breakpoints.len() - 1].0
    }

    /// Total height: the state's mass.
    pub fn height(&self) -> &M::Scalar {
        &self.breakpoints[self.breakpoints.len() - 1].1
    }

    /// Curve value at `x`, clamped to the domain `[0, Z]`.
    pub fn value_at(&self, x: &M::Scalar) -> M::Scalar {
        let pts = &self.breakpoints;
        if *x <= pts[0].0 {
            return pts[0].1.clone();
        }
        if *x >= self.width().clone() {
            return self.height().clone();
        }
        let mut hi = 1;
        while pts[hi].0 < *x {
            hi += 1;
        }
        let (x0, y0) = pts[hi - 1].clone();
        let (x1, y1) = pts[hi].clone();
        if x1 == x0 {
            return y1;
        }
        y0.clone() + (y1 - y0) * (x.clone() - x0.clone()) / (x1 - x0)
    }

    /// Successive slopes are non-increasing within tolerance.
    pub fn is_concave(&self) -> bool {
        let mut prev: Option<M::Scalar> = None;
        for pair in self.breakpoints.windows(2) {
            let (x0, y0) = pair[0].clone();
            let (x1, y1) = pair[1].clone();
            if x1 == x0 {
                continue;
            }
            let slope = (y1 - y0) / (x1 - x0);
            if let Some(p) = prev {
                if !slope.approx_le(&p) {
                    return false;
                }
            }
            prev = Some(slope);
        }
        true
    }
}

/// Builds the thermo-majorization curve of `rho`.
pub fn majorization_curve<M: Mode>(
    rho: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
) -> Result<MajorizationCurve<M>> {
    let order = beta_order(rho, ctx)?;
    let mut breakpoints = Vec::with_capacity(rho.len() + 1);
    breakpoints.push((M::Scalar::zero(), M::Scalar::zero()));
    let mut x = M::Scalar::zero();
    let mut y = M::Scalar::zero();
    for &level in order.permutation() {
        x = x + ctx.weight(level).clone();
        y = y + rho.prob(level).clone();
        breakpoints.push((x.clone(), y.clone()));
    }
    Ok(MajorizationCurve { breakpoints })
}

/// True when `a`'s curve lies nowhere below `b`'s, i.e. a thermal process
/// can map `a` to `b`. Both states must be physical and share the
/// context's spectrum.
pub fn thermo_majorizes<M: Mode>(
    a: &DiagonalState<M>,
    b: &DiagonalState<M>,
    ctx: &ThermalContext<M>,
) -> Result<bool> {
    for s in [a, b] {
        if !s.is_physical() {
            return Err(Error::NotPhysical {
                total: s.total_mass().to_string(),
            });
        }
    }
    let curve_a = majorization_curve(a, ctx)?;
    let curve_b = majorization_curve(b, ctx)?;
    // Both curves are piecewise linear, so comparing at the union of
    // breakpoint abscissae decides domination everywhere.
    let mut xs: Vec<M::Scalar> = curve_a
        .breakpoints()
        .iter()
        .chain(curve_b.breakpoints())
        .map(|(x, _)| x.clone())
        .collect();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("breakpoints are finite"));
    xs.dedup();
    let tol = M::Scalar::tol();
    for x in &xs {
        let ya = curve_a.value_at(x);
        let yb = curve_b.value_at(x);
        if ya < yb.clone() - tol.clone() {
            return Ok(false);
        }
    }
    Ok(true)
}
