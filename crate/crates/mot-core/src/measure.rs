//! Discrete probability measures on the real line and the call-price
//! curves they induce.
//!
//! A [`DiscreteMeasure`] is a finite list of strictly increasing atoms with
//! positive weights summing to one. Convex order between two measures is
//! checked through call potentials `K -> E[(X-K)+]`; by Strassen's theorem
//! it is exactly feasibility of a martingale coupling, so every transport
//! solver in this crate validates it up front. Call curves convert to
//! measures by second differencing and back by direct evaluation; the two
//! directions round-trip exactly in rational mode.

use alloc::vec;
use alloc::vec::Vec;

use core::fmt;



use crate::scalar::{eq_tol, le_tol, Scalar};

/// Finite measure support: strictly increasing atoms, positive weights,
/// total mass one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<S> {
    atoms: Vec<S>,
    weights: Vec<S>,
}

/// Construction failure for [`DiscreteMeasure`].
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureError<S> {
    /// No atoms (or none with positive weight).
    Empty,
    /// An atom position or weight is not a finite number.
    NonFinite,
    /// A weight is zero or negative after merging.
    NonpositiveWeight {
        /// Atom position carrying the offending weight.
        atom: S,
        /// The weight found.
        weight: S,
    },
    /// Total mass differs from one beyond tolerance.
    MassNotOne {
        /// The mass found.
        total: S,
    },
}

impl<S: fmt::Display> fmt::Display for MeasureError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureError::Empty => write!(f, "measure has no atoms"),
            MeasureError::NonFinite => write!(f, "non-finite atom or weight"),
            MeasureError::NonpositiveWeight { atom, weight } => {
                write!(f, "weight {weight} at atom {atom} is not positive")
            }
            MeasureError::MassNotOne { total } => {
                write!(f, "total mass {total} is not 1")
            }
        }
    }
}

fn sort_merge<S: Scalar>(pairs: &mut Vec<(S, S)>) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let merge_tol = S::atom_merge_tol();
    let mut out: Vec<(S, S)> = Vec::with_capacity(pairs.len());
    for (x, w) in pairs.drain(..) {
        match out.last_mut() {
            Some((px, pw)) if (x.clone() - px.clone()).abs() <= merge_tol => {
                // Weighted midpoint keeps the mean exact under merging.
                let tw = pw.clone() + w.clone();
                if !tw.is_zero() {
                    *px = (px.clone() * pw.clone() + x * w.clone()) / tw.clone();
                }
                *pw = tw;
            }
            _ => out.push((x, w)),
        }
    }
    *pairs = out;
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Build from `(atom, weight)` pairs. Sorts, merges atoms closer than
    /// [`Scalar::atom_merge_tol`], and validates positivity and unit mass
    /// (within [`Scalar::default_tol`]).
    pub fn new(pairs: Vec<(S, S)>) -> Result<Self, MeasureError<S>> {
        let mut pairs = pairs;
        for (x, w) in &pairs {
            if !x.to_f64().is_finite() || !w.to_f64().is_finite() {
                return Err(MeasureError::NonFinite);
            }
        }
        sort_merge(&mut pairs);
        if pairs.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut total = S::zero();
        for (x, w) in &pairs {
            if *w <= S::zero() {
                return Err(MeasureError::NonpositiveWeight {
                    atom: x.clone(),
                    weight: w.clone(),
                });
            }
            total = total + w.clone();
        }
        if !eq_tol(&total, &S::one(), &S::default_tol()) {
            return Err(MeasureError::MassNotOne { total });
        }
        let (atoms, weights) = pairs.into_iter().unzip();
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Build from arbitrary nonnegative masses: drops nonpositive entries
    /// and rescales to unit mass. For samplers and quantizers.
    pub fn normalized(pairs: Vec<(S, S)>) -> Result<Self, MeasureError<S>> {
        let mut pairs = pairs;
        pairs.retain(|(_, w)| *w > S::zero());
        sort_merge(&mut pairs);
        let total = pairs
            .iter()
            .fold(S::zero(), |acc, (_, w)| acc + w.clone());
        if pairs.is_empty() || total <= S::zero() {
            return Err(MeasureError::Empty);
        }
        let pairs = pairs
            .into_iter()
            .map(|(x, w)| (x, w / total.clone()))
            .collect();
        Self::new(pairs)
    }

    /// Point mass at `x`.
    pub fn dirac(x: S) -> Self {
        DiscreteMeasure {
            atoms: vec![x],
            weights: vec![S::one()],
        }
    }

    /// Midpoint quantization of the uniform law on `[lo, hi]` into `cells`
    /// equal cells. Each cell's conditional mean is its midpoint, so the
    /// quantized law has the exact mean `(lo+hi)/2`.
    pub fn uniform_quantized(lo: S, hi: S, cells: usize) -> Result<Self, MeasureError<S>> {
        if cells == 0 || hi <= lo {
            return Err(MeasureError::Empty);
        }
        let n = S::from_i64(cells as i64);
        let width = (hi - lo.clone()) / n.clone();
        let w = S::one() / n;
        let half = S::from_ratio(1, 2);
        let pairs = (0..cells)
            .map(|k| {
                let mid = lo.clone() + width.clone() * (S::from_i64(k as i64) + half.clone());
                (mid, w.clone())
            })
            .collect();
        Self::new(pairs)
    }

    /// Mixture `sum_k w_k * m_k`; the `w_k` must be positive and sum to one.
    pub fn mixture(parts: &[(S, DiscreteMeasure<S>)]) -> Result<Self, MeasureError<S>> {
        let mut pairs = Vec::new();
        for (scale, m) in parts {
            for (x, w) in m.iter() {
                pairs.push((x.clone(), scale.clone() * w.clone()));
            }
        }
        Self::new(pairs)
    }

    /// Atom positions, strictly increasing.
    pub fn atoms(&self) -> &[S] {
        &self.atoms
    }

    /// Atom weights, positive, summing to one.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Always false: measures are nonempty by construction.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(atom, weight)` pairs in increasing atom order.
    pub fn iter(&self) -> impl Iterator<Item = (&S, &S)> {
        self.atoms.iter().zip(self.weights.iter())
    }

    /// `E[f(X)]`.
    pub fn expectation(&self, mut f: impl FnMut(&S) -> S) -> S {
        self.iter()
            .fold(S::zero(), |acc, (x, w)| acc + f(x) * w.clone())
    }

    /// `E[X]`.
    pub fn mean(&self) -> S {
        self.expectation(|x| x.clone())
    }

    /// `E[X^k]`.
    pub fn moment(&self, k: u32) -> S {
        self.expectation(|x| {
            let mut p = S::one();
            for _ in 0..k {
                p = p * x.clone();
            }
            p
        })
    }

    /// `E[|X|^k]`.
    pub fn abs_moment(&self, k: u32) -> S {
        self.expectation(|x| {
            let a = x.abs();
            let mut p = S::one();
            for _ in 0..k {
                p = p * a.clone();
            }
            p
        })
    }

    /// Call potential `E[(X-K)+]`.
    pub fn call_price(&self, strike: &S) -> S {
        self.expectation(|x| {
            let d = x.clone() - strike.clone();
            if d > S::zero() {
                d
            } else {
                S::zero()
            }
        })
    }

    /// Image measure under `x -> a*x + b` (atoms re-sorted; collisions
    /// merge, e.g. the whole mass lands on `b` when `a == 0`).
    pub fn affine_pushforward(&self, a: &S, b: &S) -> Self {
        let pairs = self
            .iter()
            .map(|(x, w)| (a.clone() * x.clone() + b.clone(), w.clone()))
            .collect();
        // Re-validation cannot fail: weights and mass are untouched.
        Self::new(pairs).expect("affine image of a valid measure is valid")
    }
}

/// Witness that `mu` is not dominated by `nu` in convex order.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexOrderViolation<S> {
    /// Means differ beyond tolerance (a martingale preserves the mean).
    MeanMismatch {
        /// Mean of the earlier law.
        mean_mu: S,
        /// Mean of the later law.
        mean_nu: S,
    },
    /// A call potential of `mu` exceeds that of `nu`.
    PotentialExceeds {
        /// Strike at which the violation was found.
        strike: S,
        /// `E_mu[(X-K)+]`.
        potential_mu: S,
        /// `E_nu[(Y-K)+]`.
        potential_nu: S,
    },
}

impl<S: fmt::Display> fmt::Display for ConvexOrderViolation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexOrderViolation::MeanMismatch { mean_mu, mean_nu } => {
                write!(f, "means differ: {mean_mu} vs {mean_nu}")
            }
            ConvexOrderViolation::PotentialExceeds {
                strike,
                potential_mu,
                potential_nu,
            } => write!(
                f,
                "call potential at strike {strike}: {potential_mu} > {potential_nu}"
            ),
        }
    }
}

/// Check `mu <= nu` in convex order within `tol`: equal means and
/// `E_mu[(X-K)+] <= E_nu[(Y-K)+]` at every atom of either measure.
/// Potentials are piecewise linear with kinks only at atoms and matching
/// asymptotics, so checking at the union of atoms is exhaustive.
///
/// By Strassen's theorem this is precisely the condition under which a
/// martingale coupling from `mu` to `nu` exists.
pub fn convex_order<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: &S,
) -> Result<(), ConvexOrderViolation<S>> {
    let mean_mu = mu.mean();
    let mean_nu = nu.mean();
    if !eq_tol(&mean_mu, &mean_nu, tol) {
        return Err(ConvexOrderViolation::MeanMismatch { mean_mu, mean_nu });
    }
    let mut strikes: Vec<&S> = mu.atoms().iter().chain(nu.atoms().iter()).collect();
    strikes.sort_by(|a, b| a.total_cmp(b));
    strikes.dedup_by(|a, b| a == b);
    for k in strikes {
        let pm = mu.call_price(k);
        let pn = nu.call_price(k);
        if !le_tol(&pm, &pn, tol) {
            return Err(ConvexOrderViolation::PotentialExceeds {
                strike: k.clone(),
                potential_mu: pm,
                potential_nu: pn,
            });
        }
    }
    Ok(())
}

/// Sampled call prices: strictly increasing strikes with their prices.
#[derive(Clone, Debug, PartialEq)]
pub struct CallCurve<S> {
    strikes: Vec<S>,
    prices: Vec<S>,
}

/// Invalid call curve (static arbitrage or unrecoverable tails).
#[derive(Clone, Debug, PartialEq)]
pub enum CurveError<S> {
    /// Fewer than two quotes, or strikes not strictly increasing.
    BadStrikes,
    /// A price is negative or not finite.
    BadPrice {
        /// Strike of the offending quote.
        strike: S,
    },
    /// Prices increase between consecutive strikes: not arbitrage-free.
    NotMonotone {
        /// Left strike of the offending segment.
        strike: S,
    },
    /// Prices are not convex in strike: not arbitrage-free.
    NotConvex {
        /// Interior strike at which convexity fails.
        strike: S,
    },
    /// Leftmost slope differs from -1: mass below the lowest strike, the
    /// implied law is not pinned down.
    LeftTailOpen {
        /// The leftmost slope found.
        slope: S,
    },
    /// Rightmost slope differs from 0: mass above the highest strike.
    RightTailOpen {
        /// The rightmost slope found.
        slope: S,
    },
}

impl<S: fmt::Display> fmt::Display for CurveError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::BadStrikes => write!(f, "need >= 2 strictly increasing strikes"),
            CurveError::BadPrice { strike } => {
                write!(f, "bad price at strike {strike}")
            }
            CurveError::NotMonotone { strike } => write!(
                f,
                "prices increase after strike {strike}: not arbitrage-free"
            ),
            CurveError::NotConvex { strike } => write!(
                f,
                "prices not convex at strike {strike}: not arbitrage-free"
            ),
            CurveError::LeftTailOpen { slope } => write!(
                f,
                "leftmost slope {slope} != -1: law not pinned below first strike"
            ),
            CurveError::RightTailOpen { slope } => write!(
                f,
                "rightmost slope {slope} != 0: law not pinned above last strike"
            ),
        }
    }
}

impl<S: Scalar> CallCurve<S> {
    /// Validate strikes (strictly increasing) and prices (finite,
    /// nonnegative, nonincreasing and convex within `tol`).
    pub fn new(strikes: Vec<S>, prices: Vec<S>, tol: &S) -> Result<Self, CurveError<S>> {
        if strikes.len() < 2 || strikes.len() != prices.len() {
            return Err(CurveError::BadStrikes);
        }
        for w in strikes.windows(2) {
            if w[1] <= w[0] {
                return Err(CurveError::BadStrikes);
            }
        }
        for (k, p) in strikes.iter().zip(prices.iter()) {
            if !p.to_f64().is_finite() || !k.to_f64().is_finite() || *p < -tol.clone() {
                return Err(CurveError::BadPrice { strike: k.clone() });
            }
        }
        let slopes = segment_slopes(&strikes, &prices);
        for (i, s) in slopes.iter().enumerate() {
            if *s > tol.clone() {
                return Err(CurveError::NotMonotone {
                    strike: strikes[i].clone(),
                });
            }
        }
        for (i, w) in slopes.windows(2).enumerate() {
            if w[1].clone() - w[0].clone() < -tol.clone() {
                return Err(CurveError::NotConvex {
                    strike: strikes[i + 1].clone(),
                });
            }
        }
        Ok(CallCurve { strikes, prices })
    }

    /// Strikes, strictly increasing.
    pub fn strikes(&self) -> &[S] {
        &self.strikes
    }

    /// Prices aligned with [`CallCurve::strikes`].
    pub fn prices(&self) -> &[S] {
        &self.prices
    }
}

fn segment_slopes<S: Scalar>(strikes: &[S], prices: &[S]) -> Vec<S> {
    strikes
        .windows(2)
        .zip(prices.windows(2))
        .map(|(k, p)| (p[1].clone() - p[0].clone()) / (k[1].clone() - k[0].clone()))
        .collect()
}

/// Recover the implied law from a call curve by second differencing: the
/// piecewise-linear interpolant's slope changes are the atom masses at the
/// interior strikes. Requires the leftmost slope to be `-1` and the
/// rightmost `0` (within `tol`): the curve then pins total mass one and a
/// mean equal to `first_strike + first_price`.
pub fn calls_to_measure<S: Scalar>(
    curve: &CallCurve<S>,
    tol: &S,
) -> Result<DiscreteMeasure<S>, CurveError<S>> {
    let slopes = segment_slopes(&curve.strikes, &curve.prices);
    let minus_one = S::zero() - S::one();
    let first = slopes.first().expect("curve has >= 2 strikes");
    let last = slopes.last().expect("curve has >= 2 strikes");
    if !eq_tol(first, &minus_one, tol) {
        return Err(CurveError::LeftTailOpen {
            slope: first.clone(),
        });
    }
    if !eq_tol(last, &S::zero(), tol) {
        return Err(CurveError::RightTailOpen {
            slope: last.clone(),
        });
    }
    let mut pairs = Vec::new();
    for i in 1..curve.strikes.len() - 1 {
        let mass = slopes[i].clone() - slopes[i - 1].clone();
        if mass > tol.clone() {
            pairs.push((curve.strikes[i].clone(), mass));
        }
    }
    // Slopes already telescoped to mass ~1; rescale away rounding residue.
    DiscreteMeasure::normalized(pairs).map_err(|_| CurveError::RightTailOpen {
        slope: last.clone(),
    })
}

/// Sample the exact call curve of `mu` at the given strikes.
pub fn measure_to_calls<S: Scalar>(mu: &DiscreteMeasure<S>, strikes: &[S]) -> CallCurve<S> {
    let mut strikes: Vec<S> = strikes.to_vec();
    strikes.sort_by(|a, b| a.total_cmp(b));
    strikes.dedup();
    let prices = strikes.iter().map(|k| mu.call_price(k)).collect();
    CallCurve {
        strikes,
        prices,
    }
}

/// Strike grid on which [`measure_to_calls`] pins the law: one strike
/// below the support, every atom, one strike above.
pub fn pinning_strikes<S: Scalar>(mu: &DiscreteMeasure<S>) -> Vec<S> {
    let lo = mu.atoms().first().expect("measure nonempty").clone() - S::one();
    let hi = mu.atoms().last().expect("measure nonempty").clone() + S::one();
    let mut out = vec![lo];
    out.extend(mu.atoms().iter().cloned());
    out.push(hi);
    out
}

/// Result of centring a strike into the absolute-value frame.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsReduction<S> {
    /// Transformed earlier marginal, image under `x -> (x-K)/2`.
    pub mu: DiscreteMeasure<S>,
    /// Transformed later marginal, image under `y -> (y-K)/2`.
    pub nu: DiscreteMeasure<S>,
    /// Multiplier in front of the absolute-value price (always `1/2`).
    pub scale: S,
    /// Additive constant `(E[X] + E[Y])/4 - K/2`.
    pub offset: S,
}

/// Rewrite the average-strike call against marginals `(mu, nu)` in terms
/// of `|x + y|` against transformed marginals: for any coupling `pi` with
/// these marginals and `pi~` its image under the coordinate-wise map
/// `t -> (t-K)/2`,
///
/// `E_pi[((X+Y)/2 - K)+] = scale * E_pi~[|X+Y|] + offset`.
///
/// This follows from `(u)+ = |u|/2 + u/2` with `u = (X+Y)/2 - K` and the
/// fact that the coupling's marginal means are fixed; the identity holds
/// coupling by coupling, so optimizers and optima transform together.
pub fn reduce_to_abs<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    strike: &S,
) -> AbsReduction<S> {
    let half = S::from_ratio(1, 2);
    let shift = S::zero() - half.clone() * strike.clone();
    let quarter = S::from_ratio(1, 4);
    let offset = (mu.mean() + nu.mean()) * quarter - half.clone() * strike.clone();
    AbsReduction {
        mu: mu.affine_pushforward(&half, &shift),
        nu: nu.affine_pushforward(&half, &shift),
        scale: half,
        offset,
    }
}

/// First-marginal floor for a convex payoff of a later value: conditioning
/// at the first constrained date and applying Jensen's inequality gives
/// `E[phi(X_later)] >= E[phi(X_first)] = integral phi d mu`.
pub fn jensen_lower_bound<S: Scalar>(mu: &DiscreteMeasure<S>, phi: impl FnMut(&S) -> S) -> S {
    mu.expectation(phi)
}

impl<S: Scalar> fmt::Display for DiscreteMeasure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, w)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}: {w}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};
    use num_traits::Zero;

    fn half_half<S: Scalar>(a: i64, b: i64) -> DiscreteMeasure<S> {
        DiscreteMeasure::new(vec![
            (int(a), ratio(1, 2)),
            (int(b), ratio(1, 2)),
        ])
        .unwrap()
    }

    #[test]
    fn constructor_sorts_and_merges() {
        let m: DiscreteMeasure<Rational> = DiscreteMeasure::new(vec![
            (int(2), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        assert_eq!(m.atoms(), &[int::<Rational>(0), int(2)]);
        assert_eq!(m.weights(), &[ratio::<Rational>(1, 2), ratio(1, 2)]);
        assert_eq!(m.mean(), int(1));
    }

    #[test]
    fn constructor_rejects_bad_mass() {
        let e = DiscreteMeasure::<f64>::new(vec![(0.0, 0.5), (1.0, 0.6)]).unwrap_err();
        assert!(matches!(e, MeasureError::MassNotOne { .. }));
        let e = DiscreteMeasure::<f64>::new(vec![(0.0, 1.5), (1.0, -0.5)]).unwrap_err();
        assert!(matches!(e, MeasureError::NonpositiveWeight { .. }));
        let e = DiscreteMeasure::<f64>::new(vec![]).unwrap_err();
        assert!(matches!(e, MeasureError::Empty));
        let e = DiscreteMeasure::<f64>::new(vec![(f64::NAN, 1.0)]).unwrap_err();
        assert!(matches!(e, MeasureError::NonFinite));
    }

    #[test]
    fn convex_order_dirac_into_spread() {
        let mu = DiscreteMeasure::<Rational>::dirac(int(1));
        let nu = half_half::<Rational>(0, 2);
        assert_eq!(convex_order(&mu, &nu, &Rational::default_tol()), Ok(()));
        // Reverse direction fails with a potential witness.
        let err = convex_order(&nu, &mu, &Rational::default_tol()).unwrap_err();
        assert!(matches!(err, ConvexOrderViolation::PotentialExceeds { .. }));
    }

    #[test]
    fn convex_order_mean_witness() {
        let mu = DiscreteMeasure::<Rational>::dirac(int(1));
        let nu = DiscreteMeasure::<Rational>::dirac(int(2));
        let err = convex_order(&mu, &nu, &Rational::default_tol()).unwrap_err();
        assert!(matches!(err, ConvexOrderViolation::MeanMismatch { .. }));
    }

    #[test]
    fn convex_order_f64_tolerance() {
        let mu = DiscreteMeasure::<f64>::new(vec![(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let nu =
            DiscreteMeasure::<f64>::new(vec![(0.0, 0.5 + 5e-13), (2.0, 0.5 - 5e-13)]).unwrap();
        // Mean shifted by ~1e-12 < tol: still accepted.
        assert!(convex_order(&mu, &nu, &f64::default_tol()).is_ok());
    }

    #[test]
    fn call_curve_recovers_dirac() {
        // C(K) = (1-K)+ sampled on {0, 1/2, 1, 3/2, 2} -> point mass at 1.
        let strikes: Vec<Rational> = vec![
            int(0),
            ratio(1, 2),
            int(1),
            ratio(3, 2),
            int(2),
        ];
        let prices: Vec<Rational> = strikes
            .iter()
            .map(|k| {
                let d = int::<Rational>(1) - k.clone();
                if d > Rational::zero() {
                    d
                } else {
                    Rational::zero()
                }
            })
            .collect();
        let tol = Rational::default_tol();
        let curve = CallCurve::new(strikes, prices, &tol).unwrap();
        let m = calls_to_measure(&curve, &tol).unwrap();
        assert_eq!(m, DiscreteMeasure::dirac(int(1)));
    }

    #[test]
    fn call_curve_recovers_two_point_law() {
        // C(K) = (0-K)+/2 + (2-K)+/2 on {-1, 0, 1, 2, 3}.
        let strikes: Vec<Rational> = vec![int(-1), int(0), int(1), int(2), int(3)];
        let prices: Vec<Rational> = vec![int(2), int(1), ratio(1, 2), int(0), int(0)];
        let tol = Rational::default_tol();
        let curve = CallCurve::new(strikes, prices, &tol).unwrap();
        let m = calls_to_measure(&curve, &tol).unwrap();
        assert_eq!(m, half_half::<Rational>(0, 2));
        assert_eq!(m.mean(), int(1));
    }

    #[test]
    fn call_curve_rejects_increasing_prices() {
        let strikes = vec![0.0, 1.0, 2.0, 3.0];
        let prices = vec![1.0, 0.2, 0.0, 0.3];
        let e = CallCurve::new(strikes, prices, &f64::default_tol()).unwrap_err();
        assert!(matches!(e, CurveError::NotMonotone { .. }));
    }

    #[test]
    fn call_curve_rejects_nonconvex_prices() {
        let strikes = vec![0.0, 1.0, 2.0, 3.0];
        let prices = vec![3.0, 1.0, 0.9, 0.0];
        let e = CallCurve::new(strikes, prices, &f64::default_tol()).unwrap_err();
        assert!(matches!(e, CurveError::NotConvex { .. }));
    }

    #[test]
    fn call_curve_open_tails_rejected() {
        let tol = Rational::default_tol();
        // Slope -1/2 on the left: mass below the first strike.
        let curve = CallCurve::new(
            vec![int::<Rational>(0), int(2), int(3)],
            vec![int(1), int(0), int(0)],
            &tol,
        )
        .unwrap();
        assert!(matches!(
            calls_to_measure(&curve, &tol),
            Err(CurveError::LeftTailOpen { .. })
        ));
        // Slope -1 everywhere: mass above the last strike.
        let curve = CallCurve::new(
            vec![int::<Rational>(0), int(1)],
            vec![int(2), int(1)],
            &tol,
        )
        .unwrap();
        assert!(matches!(
            calls_to_measure(&curve, &tol),
            Err(CurveError::RightTailOpen { .. })
        ));
    }

    #[test]
    fn measure_calls_roundtrip_exact() {
        let m: DiscreteMeasure<Rational> = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 4)),
            (int(-1), ratio(1, 4)),
            (int(1), ratio(1, 4)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        let tol = Rational::default_tol();
        let curve = measure_to_calls(&m, &pinning_strikes(&m));
        let back = calls_to_measure(&curve, &tol).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn affine_pushforward_reverses_under_negative_scale() {
        let m = half_half::<Rational>(0, 2);
        let img = m.affine_pushforward(&int(-1), &int(0));
        assert_eq!(img.atoms(), &[int::<Rational>(-2), int(0)]);
        // Degenerate scale collapses everything onto one atom.
        let collapsed = m.affine_pushforward(&int(0), &int(5));
        assert_eq!(collapsed, DiscreteMeasure::dirac(int(5)));
    }

    #[test]
    fn strike_reduction_identity_on_diracs() {
        // mu = nu = delta_1, K = 1: both sides of the identity vanish,
        // which pins the sign of the offset.
        let mu = DiscreteMeasure::<Rational>::dirac(int(1));
        let red = reduce_to_abs(&mu, &mu, &int(1));
        assert_eq!(red.offset, int(0));
        assert_eq!(red.scale, ratio(1, 2));
        assert_eq!(red.mu, DiscreteMeasure::dirac(int(0)));
    }

    #[test]
    fn strike_reduction_transformed_marginals() {
        let mu = DiscreteMeasure::<Rational>::dirac(int(1));
        let nu = half_half::<Rational>(0, 2);
        let red = reduce_to_abs(&mu, &nu, &int(1));
        assert_eq!(red.mu, DiscreteMeasure::dirac(int(0)));
        assert_eq!(
            red.nu,
            DiscreteMeasure::new(vec![
                (ratio(-1, 2), ratio(1, 2)),
                (ratio(1, 2), ratio(1, 2)),
            ])
            .unwrap()
        );
        // Means 1 and 1: offset = 2/4 - 1/2 = 0.
        assert_eq!(red.offset, int(0));
    }

    #[test]
    fn uniform_quantization_keeps_mean() {
        let m = DiscreteMeasure::<Rational>::uniform_quantized(int(0), int(1), 8).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.mean(), ratio(1, 2));
        assert_eq!(m.atoms()[0], ratio(1, 16));
    }

    #[test]
    fn mixture_of_uniform_pieces() {
        let a = DiscreteMeasure::<Rational>::uniform_quantized(int(-2), int(0), 4).unwrap();
        let b = DiscreteMeasure::<Rational>::uniform_quantized(int(1), int(3), 4).unwrap();
        let m = DiscreteMeasure::mixture(&[(ratio(1, 2), a), (ratio(1, 2), b)]).unwrap();
        assert_eq!(m.len(), 8);
        assert_eq!(m.mean(), ratio(1, 2));
    }
}
