//! Binomial transport plans: seven-node three-step martingale fixtures.
//!
//! A plan splits a root `x` into middle nodes `x_lo <= x <= x_hi` and each
//! middle node into two terminal nodes straddling it; the barycenter
//! identities fix all branch weights, so the nodes determine the plan. The
//! module derives the two-step *right part* (middle to terminal nodes) and
//! *left part* (root straight to terminal nodes), the point-reflection
//! symmetry, a nine-case classifier giving sufficient conditions for the
//! left part to cost no more than the right under `|x + y|`, a brute-force
//! suboptimality oracle for the right part, and the dominance dichotomy
//! built from those pieces: for every plan, either the right part is beaten
//! by a competitor with the same marginals or it already costs at least as
//! much as the left part. [`dominance_check`](Btp::dominance_check) asserts
//! the dichotomy instance by instance and reports any breach, which makes
//! it a falsification harness rather than a proof.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::lp::Direction;
use crate::measure::DiscreteMeasure;
use crate::mot::{solve_two_step, Coupling, MotError};
use crate::scalar::{eq_tol, le_tol, ratio, Scalar};

/// Construction or checking failure for a binomial plan.
#[derive(Clone, Debug)]
pub enum BtpError<S> {
    /// A node chain is out of order.
    Ordering {
        /// The violated chain, e.g. `"y_lo_lo <= x_lo <= y_lo_hi"`.
        chain: &'static str,
    },
    /// A node is NaN or infinite.
    NonFinite,
    /// The suboptimality oracle's solve failed.
    Solve(MotError<S>),
    /// The dominance dichotomy failed: the right part is optimal for its
    /// marginals yet still cheaper than the left part. Must never occur.
    DichotomyBreached {
        /// Nodes `(x, x_lo, x_hi, y_lo_lo, y_lo_hi, y_hi_lo, y_hi_hi)`.
        nodes: [S; 7],
        /// Cost of the left part under `|x + y|`.
        cost_left: S,
        /// Cost of the right part under `|x + y|`.
        cost_right: S,
        /// Best competitor value found for the right part's marginals.
        oracle_value: S,
    },
}

impl<S: fmt::Display> fmt::Display for BtpError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BtpError::Ordering { chain } => write!(f, "node ordering violated: {chain}"),
            BtpError::NonFinite => write!(f, "nodes must be finite"),
            BtpError::Solve(e) => write!(f, "suboptimality oracle failed: {e}"),
            BtpError::DichotomyBreached {
                nodes,
                cost_left,
                cost_right,
                oracle_value,
            } => {
                write!(
                    f,
                    "dominance dichotomy breached: left {cost_left} > right {cost_right} \
                     with no improving competitor (oracle {oracle_value}) on nodes ["
                )?;
                for (k, v) in nodes.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl<S> From<MotError<S>> for BtpError<S> {
    fn from(e: MotError<S>) -> Self {
        BtpError::Solve(e)
    }
}

/// A binomial transport plan.
///
/// Nodes satisfy `x_lo <= x <= x_hi`, `y_lo_lo <= x_lo <= y_lo_hi` and
/// `y_hi_lo <= x_hi <= y_hi_hi`. The root splits to `x_lo`/`x_hi` with
/// weights `w_lo`/`w_hi` chosen so the mean is `x`; each middle node splits
/// to its terminal pair with weights reproducing it in mean. Degenerate
/// splits (equal endpoints) put weight one on the upper node.
#[derive(Clone, Debug)]
pub struct Btp<S> {
    x: S,
    x_lo: S,
    x_hi: S,
    y_lo_lo: S,
    y_lo_hi: S,
    y_hi_lo: S,
    y_hi_hi: S,
    w_lo: S,
    w_hi: S,
    w_lo_lo: S,
    w_lo_hi: S,
    w_hi_lo: S,
    w_hi_hi: S,
}

/// Splitting weight of `v` between `lo` and `hi`: the coefficient on `hi`
/// in the convex combination equal to `v`, or one when the pair collapses.
fn upper_weight<S: Scalar>(v: &S, lo: &S, hi: &S) -> S {
    if *hi > *lo {
        (v.clone() - lo.clone()) / (hi.clone() - lo.clone())
    } else {
        S::one()
    }
}

impl<S: Scalar> Btp<S> {
    /// Build a plan from its seven nodes, validating the orderings.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        x: S,
        x_lo: S,
        x_hi: S,
        y_lo_lo: S,
        y_lo_hi: S,
        y_hi_lo: S,
        y_hi_hi: S,
    ) -> Result<Self, BtpError<S>> {
        for v in [&x, &x_lo, &x_hi, &y_lo_lo, &y_lo_hi, &y_hi_lo, &y_hi_hi] {
            if !v.to_f64().is_finite() {
                return Err(BtpError::NonFinite);
            }
        }
        if !(x_lo <= x && x <= x_hi) {
            return Err(BtpError::Ordering {
                chain: "x_lo <= x <= x_hi",
            });
        }
        if !(y_lo_lo <= x_lo && x_lo <= y_lo_hi) {
            return Err(BtpError::Ordering {
                chain: "y_lo_lo <= x_lo <= y_lo_hi",
            });
        }
        if !(y_hi_lo <= x_hi && x_hi <= y_hi_hi) {
            return Err(BtpError::Ordering {
                chain: "y_hi_lo <= x_hi <= y_hi_hi",
            });
        }
        let w_hi = upper_weight(&x, &x_lo, &x_hi);
        let w_lo_hi = upper_weight(&x_lo, &y_lo_lo, &y_lo_hi);
        let w_hi_hi = upper_weight(&x_hi, &y_hi_lo, &y_hi_hi);
        Ok(Btp {
            w_lo: S::one() - w_hi.clone(),
            w_hi,
            w_lo_lo: S::one() - w_lo_hi.clone(),
            w_lo_hi,
            w_hi_lo: S::one() - w_hi_hi.clone(),
            w_hi_hi,
            x,
            x_lo,
            x_hi,
            y_lo_lo,
            y_lo_hi,
            y_hi_lo,
            y_hi_hi,
        })
    }

    /// Nodes in construction order
    /// `(x, x_lo, x_hi, y_lo_lo, y_lo_hi, y_hi_lo, y_hi_hi)`.
    pub fn nodes(&self) -> [S; 7] {
        [
            self.x.clone(),
            self.x_lo.clone(),
            self.x_hi.clone(),
            self.y_lo_lo.clone(),
            self.y_lo_hi.clone(),
            self.y_hi_lo.clone(),
            self.y_hi_hi.clone(),
        ]
    }

    /// Branch weights `(w_lo, w_hi, w_lo_lo, w_lo_hi, w_hi_lo, w_hi_hi)`.
    pub fn weights(&self) -> [S; 6] {
        [
            self.w_lo.clone(),
            self.w_hi.clone(),
            self.w_lo_lo.clone(),
            self.w_lo_hi.clone(),
            self.w_hi_lo.clone(),
            self.w_hi_hi.clone(),
        ]
    }

    /// The four weighted paths `(root, middle, terminal, mass)`.
    pub fn paths(&self) -> [(S, S, S, S); 4] {
        [
            (
                self.x.clone(),
                self.x_lo.clone(),
                self.y_lo_lo.clone(),
                self.w_lo.clone() * self.w_lo_lo.clone(),
            ),
            (
                self.x.clone(),
                self.x_lo.clone(),
                self.y_lo_hi.clone(),
                self.w_lo.clone() * self.w_lo_hi.clone(),
            ),
            (
                self.x.clone(),
                self.x_hi.clone(),
                self.y_hi_lo.clone(),
                self.w_hi.clone() * self.w_hi_lo.clone(),
            ),
            (
                self.x.clone(),
                self.x_hi.clone(),
                self.y_hi_hi.clone(),
                self.w_hi.clone() * self.w_hi_hi.clone(),
            ),
        ]
    }

    /// Middle-to-terminal coupling: mass `w_lo * w_lo_lo` at
    /// `(x_lo, y_lo_lo)` and so on. A martingale by construction.
    pub fn right_part(&self) -> Coupling<S> {
        Coupling::from_points(
            self.paths()
                .into_iter()
                .map(|(_, m, t, w)| (m, t, w))
                .collect(),
        )
    }

    /// Root-to-terminal coupling: the right part with every first
    /// coordinate replaced by `x`. A martingale by the tower property.
    pub fn left_part(&self) -> Coupling<S> {
        Coupling::from_points(
            self.paths()
                .into_iter()
                .map(|(r, _, t, w)| (r, t, w))
                .collect(),
        )
    }

    /// Cost of the right part under `|x + y|`.
    pub fn cost_right(&self) -> S {
        self.right_part().cost(abs_sum)
    }

    /// Cost of the left part under `|x + y|`.
    pub fn cost_left(&self) -> S {
        self.left_part().cost(abs_sum)
    }

    /// Point reflection through the origin: negates every node and swaps
    /// the branches so the orderings still hold. An involution that
    /// preserves both part costs under `|x + y|`.
    pub fn mirror(&self) -> Btp<S> {
        Btp::new(
            -self.x.clone(),
            -self.x_hi.clone(),
            -self.x_lo.clone(),
            -self.y_hi_hi.clone(),
            -self.y_hi_lo.clone(),
            -self.y_lo_hi.clone(),
            -self.y_lo_lo.clone(),
        )
        .expect("negation and branch swap preserve the orderings")
    }

    /// All dominance cases whose hypotheses hold at tolerance `tol`
    /// (non-strict comparisons widen by `tol`; pass zero for exact mode).
    /// Each matched case is a sufficient condition for
    /// `cost_left <= cost_right`.
    pub fn classify_cases(&self, tol: &S) -> Vec<DominanceCase> {
        let zero = S::zero();
        let le = |a: &S, b: &S| le_tol(a, b, tol);
        let ge = |a: &S, b: &S| le_tol(b, a, tol);
        let sum = |a: &S, b: &S| a.clone() + b.clone();
        let mut out = Vec::new();

        if le(&self.y_lo_hi, &self.y_hi_lo) {
            out.push(DominanceCase::TargetsOrdered);
        }
        if ge(&sum(&self.x_lo, &self.y_hi_lo), &zero) && ge(&sum(&self.x_lo, &self.y_lo_lo), &zero)
        {
            out.push(DominanceCase::AllNonnegative);
        }
        if le(&sum(&self.x_hi, &self.y_hi_hi), &zero) && le(&sum(&self.x_hi, &self.y_lo_hi), &zero)
        {
            out.push(DominanceCase::AllNonpositive);
        }
        if le(&sum(&self.x_hi, &self.y_lo_hi), &zero)
            && le(&sum(&self.x_hi, &self.y_hi_lo), &zero)
            && ge(&sum(&self.x_hi, &self.y_hi_hi), &zero)
        {
            out.push(DominanceCase::OnlyTopPositive);
        }
        if ge(&sum(&self.x_lo, &self.y_hi_lo), &zero)
            && ge(&sum(&self.x_lo, &self.y_lo_hi), &zero)
            && le(&sum(&self.x_lo, &self.y_lo_lo), &zero)
        {
            out.push(DominanceCase::OnlyBottomNegative);
        }

        let gap = self.x_hi.clone() - self.x_lo.clone();

        // Nested targets need an interpolation weight along the wide lower
        // pair; a collapsed pair leaves it undefined and the case unmatched.
        let lo_span = self.y_lo_hi.clone() - self.y_lo_lo.clone();
        if lo_span > zero
            && ge(&sum(&self.x_lo, &self.y_lo_hi), &zero)
            && le(&sum(&self.x_lo, &self.y_lo_lo), &zero)
            && ge(&sum(&self.x_hi, &self.y_hi_lo), &zero)
            && le(&self.y_lo_lo, &self.y_hi_lo)
            && le(&self.y_hi_lo, &self.y_hi_hi)
            && le(&self.y_hi_hi, &self.y_lo_hi)
        {
            let t_lo = (self.y_lo_hi.clone() - self.y_hi_lo.clone()) / lo_span.clone();
            let t_hi = (self.y_lo_hi.clone() - self.y_hi_hi.clone()) / lo_span.clone();
            if le(
                &((S::one() - t_lo) * gap.clone()),
                &sum(&self.x_hi, &self.y_hi_lo),
            ) && le(
                &((S::one() - t_hi) * gap.clone()),
                &sum(&self.x_hi, &self.y_hi_hi),
            ) {
                out.push(DominanceCase::NestedUpperTargets);
            }
        }

        let hi_span = self.y_hi_hi.clone() - self.y_hi_lo.clone();
        if hi_span > zero
            && ge(&sum(&self.x_lo, &self.y_lo_hi), &zero)
            && le(&sum(&self.x_lo, &self.y_lo_lo), &zero)
            && ge(&sum(&self.x_lo, &self.y_hi_hi), &zero)
            && le(&sum(&self.x_hi, &self.y_hi_lo), &zero)
            && le(&self.y_hi_lo, &self.y_lo_lo)
            && le(&self.y_lo_lo, &self.y_hi_hi)
            && le(&self.y_hi_hi, &self.y_lo_hi)
        {
            let t = (self.y_hi_hi.clone() - self.y_lo_lo.clone()) / hi_span;
            if le(
                &(t * gap.clone()),
                &(-sum(&self.x_lo, &self.y_lo_lo)),
            ) {
                out.push(DominanceCase::InterleavedTargets);
            }
        }

        if lo_span > zero
            && eq_tol(&self.y_lo_lo, &self.y_hi_lo, tol)
            && le(&sum(&self.x_hi, &self.y_lo_lo), &zero)
            && ge(&sum(&self.x_lo, &self.y_lo_hi), &zero)
            && ge(&sum(&self.x_hi, &self.y_hi_hi), &zero)
            && le(&self.y_hi_hi, &self.y_lo_hi)
        {
            let t = (self.y_lo_hi.clone() - self.y_hi_hi.clone()) / lo_span;
            if le(&((S::one() - t) * gap), &sum(&self.x_hi, &self.y_hi_hi)) {
                out.push(DominanceCase::SharedLowerTarget);
            }
        }

        if eq_tol(&self.y_lo_hi, &self.y_hi_hi, tol) && eq_tol(&self.y_lo_lo, &self.y_hi_lo, tol) {
            out.push(DominanceCase::SharedTargets);
        }
        out
    }

    /// Maximize `|x + y|` over all martingale couplings with the right
    /// part's marginals.
    fn right_oracle(&self) -> Result<(S, Coupling<S>), BtpError<S>> {
        let right = self.right_part();
        let mu = marginal(right.x_atoms(), &right.x_weights());
        let nu = marginal(right.y_atoms(), &right.y_weights());
        let best = solve_two_step(&mu, &nu, abs_sum, Direction::Maximize)?;
        Ok((best.value, best.coupling))
    }

    /// Whether some martingale coupling with the right part's marginals
    /// beats `cost_right` by more than `tol` under `|x + y|`; returns that
    /// competitor and its value when one exists.
    pub fn right_part_suboptimal(&self, tol: &S) -> Result<Option<(Coupling<S>, S)>, BtpError<S>> {
        let (value, competitor) = self.right_oracle()?;
        if value > self.cost_right() + tol.clone() {
            Ok(Some((competitor, value)))
        } else {
            Ok(None)
        }
    }

    /// Assert the dominance dichotomy at tolerance `tol`: the right part is
    /// suboptimal for its marginals, or it costs at least as much as the
    /// left part. Reports which branch held (possibly both) together with
    /// the matched cases; a plan satisfying neither branch is returned as
    /// [`BtpError::DichotomyBreached`].
    pub fn dominance_check(&self, tol: &S) -> Result<DominanceReport<S>, BtpError<S>> {
        let cost_left = self.cost_left();
        let cost_right = self.cost_right();
        let left_dominated = le_tol(&cost_left, &cost_right, tol);
        let (oracle_value, competitor) = self.right_oracle()?;
        let suboptimal = oracle_value > cost_right.clone() + tol.clone();
        let verdict = match (suboptimal, left_dominated) {
            (true, true) => Verdict::Both,
            (true, false) => Verdict::RightSuboptimal,
            (false, true) => Verdict::LeftDominated,
            (false, false) => {
                return Err(BtpError::DichotomyBreached {
                    nodes: self.nodes(),
                    cost_left,
                    cost_right,
                    oracle_value,
                });
            }
        };
        Ok(DominanceReport {
            verdict,
            matched_cases: self.classify_cases(tol),
            competitor: suboptimal.then_some(competitor),
            cost_left,
            cost_right,
        })
    }
}

/// `|x + y|`, the cost all dominance statements are made for.
fn abs_sum<S: Scalar>(x: &S, y: &S) -> S {
    (x.clone() + y.clone()).abs()
}

/// Probability measure from parallel atom/weight slices, dropping the
/// zero-weight atoms a degenerate branch leaves behind.
fn marginal<S: Scalar>(atoms: &[S], weights: &[S]) -> DiscreteMeasure<S> {
    DiscreteMeasure::new(
        atoms
            .iter()
            .cloned()
            .zip(weights.iter().cloned())
            .filter(|(_, w)| !w.is_zero())
            .collect(),
    )
    .expect("branch weights of a valid plan sum to one")
}

/// The nine sufficient conditions for the left part to cost no more than
/// the right part under `|x + y|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DominanceCase {
    /// Every lower-branch target is below every upper-branch target:
    /// `y_lo_hi <= y_hi_lo`.
    TargetsOrdered,
    /// Every sum `x + y` seen by either part is nonnegative:
    /// `x_lo + y_hi_lo >= 0` and `x_lo + y_lo_lo >= 0`.
    AllNonnegative,
    /// Every such sum is nonpositive: `x_hi + y_hi_hi <= 0` and
    /// `x_hi + y_lo_hi <= 0`.
    AllNonpositive,
    /// Only the top target crosses zero: `x_hi + y_lo_hi <= 0`,
    /// `x_hi + y_hi_lo <= 0`, `x_hi + y_hi_hi >= 0`.
    OnlyTopPositive,
    /// Only the bottom target crosses zero: `x_lo + y_hi_lo >= 0`,
    /// `x_lo + y_lo_hi >= 0`, `x_lo + y_lo_lo <= 0`.
    OnlyBottomNegative,
    /// Upper-branch targets nest inside the lower pair
    /// (`y_lo_lo <= y_hi_lo <= y_hi_hi <= y_lo_hi`), the root straddles
    /// zero within the lower pair, and both upper targets sit far enough
    /// right as measured by their interpolation weights along the lower
    /// pair.
    NestedUpperTargets,
    /// Branch targets interleave (`y_hi_lo <= y_lo_lo <= y_hi_hi <=
    /// y_lo_hi`) with the lower pair straddling zero from the right and
    /// the upper pair from the left, plus an interpolation bound.
    InterleavedTargets,
    /// Both branches share their bottom target (`y_lo_lo = y_hi_lo`),
    /// which is nonpositive from `x_hi`, with an interpolation bound on
    /// the top target.
    SharedLowerTarget,
    /// Both branches share both targets: `y_lo_hi = y_hi_hi` and
    /// `y_lo_lo = y_hi_lo`.
    SharedTargets,
}

impl DominanceCase {
    /// All cases in classifier order.
    pub const ALL: [DominanceCase; 9] = [
        DominanceCase::TargetsOrdered,
        DominanceCase::AllNonnegative,
        DominanceCase::AllNonpositive,
        DominanceCase::OnlyTopPositive,
        DominanceCase::OnlyBottomNegative,
        DominanceCase::NestedUpperTargets,
        DominanceCase::InterleavedTargets,
        DominanceCase::SharedLowerTarget,
        DominanceCase::SharedTargets,
    ];

    /// Stable kebab-case identifier.
    pub fn name(self) -> &'static str {
        match self {
            DominanceCase::TargetsOrdered => "targets-ordered",
            DominanceCase::AllNonnegative => "all-nonnegative",
            DominanceCase::AllNonpositive => "all-nonpositive",
            DominanceCase::OnlyTopPositive => "only-top-positive",
            DominanceCase::OnlyBottomNegative => "only-bottom-negative",
            DominanceCase::NestedUpperTargets => "nested-upper-targets",
            DominanceCase::InterleavedTargets => "interleaved-targets",
            DominanceCase::SharedLowerTarget => "shared-lower-target",
            DominanceCase::SharedTargets => "shared-targets",
        }
    }

    /// The case matched by the mirrored plan exactly when `self` matches
    /// the original, or `None` for the cases without that symmetry.
    pub fn mirror_pair(self) -> Option<DominanceCase> {
        match self {
            DominanceCase::TargetsOrdered => Some(DominanceCase::TargetsOrdered),
            DominanceCase::AllNonnegative => Some(DominanceCase::AllNonpositive),
            DominanceCase::AllNonpositive => Some(DominanceCase::AllNonnegative),
            DominanceCase::OnlyTopPositive => Some(DominanceCase::OnlyBottomNegative),
            DominanceCase::OnlyBottomNegative => Some(DominanceCase::OnlyTopPositive),
            DominanceCase::SharedTargets => Some(DominanceCase::SharedTargets),
            _ => None,
        }
    }
}

/// Which branch of the dominance dichotomy held.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// `cost_left <= cost_right + tol` only.
    LeftDominated,
    /// An improving competitor for the right part's marginals only.
    RightSuboptimal,
    /// Both branches held.
    Both,
}

impl Verdict {
    /// Stable kebab-case identifier.
    pub fn name(self) -> &'static str {
        match self {
            Verdict::LeftDominated => "left-dominated",
            Verdict::RightSuboptimal => "right-suboptimal",
            Verdict::Both => "both",
        }
    }

    /// Whether the left part cost at most the right part.
    pub fn left_dominated(self) -> bool {
        matches!(self, Verdict::LeftDominated | Verdict::Both)
    }

    /// Whether the right part admitted an improving competitor.
    pub fn right_suboptimal(self) -> bool {
        matches!(self, Verdict::RightSuboptimal | Verdict::Both)
    }
}

/// Outcome of [`Btp::dominance_check`].
#[derive(Clone, Debug)]
pub struct DominanceReport<S> {
    /// Which dichotomy branch held.
    pub verdict: Verdict,
    /// Cases matched by the classifier, in classifier order.
    pub matched_cases: Vec<DominanceCase>,
    /// Improving competitor for the right part's marginals, if any.
    pub competitor: Option<Coupling<S>>,
    /// Cost of the left part under `|x + y|`.
    pub cost_left: S,
    /// Cost of the right part under `|x + y|`.
    pub cost_right: S,
}

/// Sample a random plan: seven draws from the centered grid
/// `radius * k / 1_000_000`, `k` integer, with the root chain sorted into
/// place and the branch chains accepted by rejection.
pub fn random_btp<S: Scalar, R: Rng>(rng: &mut R, radius: i64) -> Btp<S> {
    loop {
        let mut draw = || -> S { ratio(radius * rng.gen_range(-1_000_000..=1_000_000), 1_000_000) };
        let mut xs = [draw(), draw(), draw()];
        xs.sort_by(|a, b| a.total_cmp(b));
        let [x_lo, x, x_hi] = xs;
        let mut lo_pair = [draw(), draw()];
        lo_pair.sort_by(|a, b| a.total_cmp(b));
        let mut hi_pair = [draw(), draw()];
        hi_pair.sort_by(|a, b| a.total_cmp(b));
        let [y_lo_lo, y_lo_hi] = lo_pair;
        let [y_hi_lo, y_hi_hi] = hi_pair;
        if let Ok(b) = Btp::new(x, x_lo, x_hi, y_lo_lo, y_lo_hi, y_hi_lo, y_hi_hi) {
            return b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};
    use num_traits::{Signed, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plan(nodes: [i64; 7]) -> Btp<Rational> {
        let [x, x_lo, x_hi, a, b, c, d] = nodes.map(int::<Rational>);
        Btp::new(x, x_lo, x_hi, a, b, c, d).unwrap()
    }

    fn symmetric_plan() -> Btp<Rational> {
        plan([0, -1, 1, -2, 0, 0, 2])
    }

    #[test]
    fn half_weights_on_the_symmetric_plan() {
        let b = symmetric_plan();
        let half = ratio::<Rational>(1, 2);
        assert!(b.weights().iter().all(|w| *w == half));
    }

    #[test]
    fn degenerate_splits_put_weight_on_the_upper_node() {
        let a = int::<Rational>(2);
        let b = Btp::new(
            a.clone(),
            a.clone(),
            a.clone(),
            a.clone(),
            a.clone(),
            a.clone(),
            a.clone(),
        )
        .unwrap();
        let one = int::<Rational>(1);
        let zero = int::<Rational>(0);
        assert_eq!(
            b.weights(),
            [
                zero.clone(),
                one.clone(),
                zero.clone(),
                one.clone(),
                zero,
                one
            ]
        );
    }

    #[test]
    fn ordering_violations_are_rejected() {
        let r = Btp::new(
            int::<Rational>(0),
            int::<Rational>(-1),
            int::<Rational>(1),
            int::<Rational>(-2),
            int::<Rational>(0),
            int::<Rational>(2),
            int::<Rational>(0),
        );
        assert!(matches!(
            r,
            Err(BtpError::Ordering {
                chain: "y_hi_lo <= x_hi <= y_hi_hi"
            })
        ));
        assert!(Btp::new(0.0, 0.5, 1.0, -1.0, 1.0, 0.0, 2.0).is_err());
        assert!(Btp::new(f64::NAN, 0.0, 1.0, -1.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn golden_part_costs() {
        let b = symmetric_plan();
        assert_eq!(b.cost_right(), int::<Rational>(2));
        assert_eq!(b.cost_left(), int::<Rational>(1));
    }

    #[test]
    fn parts_are_exact_martingales() {
        let b = plan([2, 1, 3, 1, 3, 2, 4]);
        for part in [b.right_part(), b.left_part()] {
            assert!(part.martingale_defect().is_zero());
            assert_eq!(part.mass(), int::<Rational>(1));
        }
        // Lower-row barycenter equals its mass times the middle node.
        let right = b.right_part();
        let x_lo = int::<Rational>(1);
        let row_mean: Rational = right
            .iter()
            .filter(|(x, _, _)| **x == x_lo)
            .map(|(_, y, w)| y.clone() * w.clone())
            .sum();
        assert_eq!(row_mean, b.weights()[0].clone() * x_lo);
    }

    #[test]
    fn collapsed_middle_nodes_make_the_parts_equal() {
        let b = plan([1, 1, 1, 0, 2, 0, 2]);
        let (l, r) = (b.left_part(), b.right_part());
        assert_eq!(l.x_atoms(), r.x_atoms());
        assert_eq!(l.y_atoms(), r.y_atoms());
        assert_eq!(l.entries(), r.entries());
    }

    #[test]
    fn mirror_fixes_the_symmetric_plan_and_inverts_itself() {
        let b = symmetric_plan();
        assert_eq!(b.mirror().nodes(), b.nodes());
        let c = plan([2, 1, 3, 1, 3, 2, 4]);
        assert_eq!(c.mirror().mirror().nodes(), c.nodes());
        assert_eq!(c.mirror().cost_left(), c.cost_left());
        assert_eq!(c.mirror().cost_right(), c.cost_right());
    }

    #[test]
    fn classifier_matches_the_golden_cases() {
        let zero = Rational::zero();
        assert!(symmetric_plan()
            .classify_cases(&zero)
            .contains(&DominanceCase::TargetsOrdered));
        let all_right = plan([2, 1, 3, 1, 3, 2, 4]);
        assert!(all_right
            .classify_cases(&zero)
            .contains(&DominanceCase::AllNonnegative));
        assert!(all_right
            .mirror()
            .classify_cases(&zero)
            .contains(&DominanceCase::AllNonpositive));
        assert!(plan([1, 0, 2, -1, 3, -1, 3])
            .classify_cases(&zero)
            .contains(&DominanceCase::SharedTargets));
    }

    #[test]
    fn interpolation_cases_match_and_respect_degeneracy() {
        let zero = Rational::zero();
        // Nested upper targets strictly inside a wide lower pair.
        let nested = plan([0, -2, 2, -5, 5, 1, 3]);
        assert!(nested
            .classify_cases(&zero)
            .contains(&DominanceCase::NestedUpperTargets));
        // Collapse the lower pair: the interpolation weight is undefined
        // and only the shared-targets style cases may match.
        let collapsed = plan([1, 1, 1, 1, 1, 0, 2]);
        assert!(!collapsed
            .classify_cases(&zero)
            .contains(&DominanceCase::NestedUpperTargets));
    }

    #[test]
    fn suboptimal_right_part_is_detected_with_an_exact_competitor() {
        let b = Btp::new(
            ratio::<Rational>(1, 2),
            int(0),
            int(1),
            int(-3),
            int(2),
            int(-2),
            int(3),
        )
        .unwrap();
        assert_eq!(b.cost_right(), ratio::<Rational>(13, 5));
        let (best, value) = b
            .right_part_suboptimal(&Rational::zero())
            .unwrap()
            .expect("an improving competitor exists");
        assert_eq!(value, ratio::<Rational>(83, 30));
        assert_eq!(best.cost(|x, y| (x.clone() + y.clone()).abs()), value);
        assert!(best.martingale_defect().is_zero());
    }

    #[test]
    fn optimal_right_parts_report_no_competitor() {
        let zero = Rational::zero();
        assert!(symmetric_plan().right_part_suboptimal(&zero).unwrap().is_none());
        // Collapsed middle nodes leave a single-row polytope.
        assert!(plan([1, 1, 1, 0, 2, 0, 2])
            .right_part_suboptimal(&zero)
            .unwrap()
            .is_none());
    }

    #[test]
    fn dominance_on_the_golden_plans() {
        let zero = Rational::zero();
        let report = symmetric_plan().dominance_check(&zero).unwrap();
        assert_eq!(report.verdict, Verdict::LeftDominated);
        assert!(report.matched_cases.contains(&DominanceCase::TargetsOrdered));
        assert_eq!(report.cost_left, int::<Rational>(1));
        assert_eq!(report.cost_right, int::<Rational>(2));

        let sub = Btp::new(
            ratio::<Rational>(1, 2),
            int(0),
            int(1),
            int(-3),
            int(2),
            int(-2),
            int(3),
        )
        .unwrap();
        let report = sub.dominance_check(&zero).unwrap();
        assert!(report.verdict.right_suboptimal());
        assert!(report.competitor.is_some());
        assert_eq!(report.cost_left, report.cost_right);

        let degenerate = plan([1, 1, 1, 0, 2, 0, 2]);
        let report = degenerate.dominance_check(&zero).unwrap();
        assert_eq!(report.verdict, Verdict::LeftDominated);
        assert_eq!(report.cost_left, report.cost_right);
    }

    #[test]
    fn random_plans_never_breach_the_dichotomy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let zero = Rational::zero();
        for _ in 0..120 {
            let b: Btp<Rational> = random_btp(&mut rng, 3);
            let nodes = b.nodes();
            assert!(nodes[1] <= nodes[0] && nodes[0] <= nodes[2]);
            for w in b.weights() {
                assert!(Rational::zero() <= w && w <= int::<Rational>(1));
            }
            let report = b.dominance_check(&zero).unwrap_or_else(|e| {
                panic!("dichotomy must hold: {e}");
            });
            // Matched cases independently certify left dominance.
            if !report.matched_cases.is_empty() {
                assert!(report.cost_left <= report.cost_right);
            }
            // Mirror invariance of verdicts, costs and paired cases.
            let m = b.mirror();
            let mirrored = m.dominance_check(&zero).unwrap();
            assert_eq!(mirrored.verdict, report.verdict);
            assert_eq!(mirrored.cost_left, report.cost_left);
            assert_eq!(mirrored.cost_right, report.cost_right);
            let cases = b.classify_cases(&zero);
            let mirrored_cases = m.classify_cases(&zero);
            for case in DominanceCase::ALL {
                if let Some(pair) = case.mirror_pair() {
                    assert_eq!(cases.contains(&case), mirrored_cases.contains(&pair));
                }
            }
        }
    }
}
