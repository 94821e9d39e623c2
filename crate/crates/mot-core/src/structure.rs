//! Geometry diagnostics for extremal couplings of the signed-sum cost
//! `|x + y|`.
//!
//! For nonnegative first marginals, extremal couplings concentrate on the
//! graphs of two functions plus the reflection line `y = -x`: the
//! minimizer's upper graph is non-decreasing, the maximizer's is
//! non-increasing. This module classifies a coupling's support into those
//! branches, checks the monotonicity, and scans for the local three-point
//! patterns that optimality rules out. A swap argument shows each pattern
//! admits a strictly better competitor coupling, so matches certify
//! suboptimality; the scanner relaxes every comparison by a tolerance so
//! only robust matches are reported.
//!
//! [`Wedge`] exposes the one-dimensional test functions behind the swap
//! argument: the gain from rebalancing a target `y` against an enclosing
//! pair `y- < y < y+`, as a function of the source point.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::lp::Direction;
use crate::mot::Coupling;
use crate::scalar::Scalar;

/// Cap on elementary pattern checks in [`forbidden_constellations`].
pub const SCAN_CAP: u64 = 10_000_000;

/// The forbidden local patterns. `Min*` rules apply to lexicographic
/// minimizers with nonnegative sources, `Max*` to lexicographic
/// maximizers with nonnegative sources, `Mixed*` to any maximizer
/// regardless of source sign. In every pattern the source `x` sends mass
/// to both `y-` and `y+`, and some other source `x'` hits a point `y'`
/// strictly between them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleId {
    /// Minimizer, `y- < -x < y+`: no competitor to the right may land
    /// above the reflection (`-x < y'`, `x < x'`).
    MinStraddleRight,
    /// Minimizer, `y- < -x < y+`: no competitor to the left may land
    /// below the reflection (`y' < -x`, `x' < x`).
    MinStraddleLeft,
    /// Minimizer, both targets at or above the reflection (`-x <= y-`):
    /// no competitor farther right (`x < x'`) may land strictly inside.
    MinNestedInterior,
    /// Maximizer, `y- < -x' < y+`: no competitor to the right may land at
    /// or below its own reflection (`y' <= -x'`, `x < x'`).
    MaxStraddleRight,
    /// Maximizer, `y- < -x' < y+`: no competitor to the left may land at
    /// or above its own reflection (`-x' <= y'`, `x' < x`).
    MaxStraddleLeft,
    /// Maximizer, `x' < x` and `-x <= y-`: no interior landing at all.
    MaxNestedInterior,
    /// Any-sign maximizer: competitor left (`x' < x`) landing at or above
    /// its own reflection, which cuts the pair (`y- < -x' <= y'`).
    MixedLeftHigh,
    /// Any-sign maximizer: competitor right (`x < x'`) landing at or
    /// below its own reflection (`y' <= -x' < y+`).
    MixedRightLow,
    /// Any-sign maximizer: `x' < x`, both targets at or above the
    /// source's reflection, competitor's reflection interior
    /// (`-x <= y- < -x' < y+`).
    MixedLeftNested,
    /// Any-sign maximizer: `x < x'`, competitor's reflection interior,
    /// both targets at or below the source's reflection
    /// (`y- < -x' < y+ <= -x`).
    MixedRightWide,
}

impl RuleId {
    /// Kebab-case identifier used in reports.
    pub fn name(self) -> &'static str {
        match self {
            RuleId::MinStraddleRight => "min-straddle-right",
            RuleId::MinStraddleLeft => "min-straddle-left",
            RuleId::MinNestedInterior => "min-nested-interior",
            RuleId::MaxStraddleRight => "max-straddle-right",
            RuleId::MaxStraddleLeft => "max-straddle-left",
            RuleId::MaxNestedInterior => "max-nested-interior",
            RuleId::MixedLeftHigh => "mixed-left-high",
            RuleId::MixedRightLow => "mixed-right-low",
            RuleId::MixedLeftNested => "mixed-left-nested",
            RuleId::MixedRightWide => "mixed-right-wide",
        }
    }

    /// Rules scanned for the given optimization sense.
    pub fn rules_for(direction: Direction) -> &'static [RuleId] {
        match direction {
            Direction::Minimize => &[
                RuleId::MinStraddleRight,
                RuleId::MinStraddleLeft,
                RuleId::MinNestedInterior,
            ],
            Direction::Maximize => &[
                RuleId::MaxStraddleRight,
                RuleId::MaxStraddleLeft,
                RuleId::MaxNestedInterior,
                RuleId::MixedLeftHigh,
                RuleId::MixedRightLow,
                RuleId::MixedLeftNested,
                RuleId::MixedRightWide,
            ],
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A matched forbidden pattern.
#[derive(Clone, Debug)]
pub struct ConstellationViolation<S> {
    /// Which pattern matched.
    pub rule: RuleId,
    /// Source sending to both enclosing targets.
    pub x: S,
    /// Lower enclosing target of `x`.
    pub y_minus: S,
    /// Upper enclosing target of `x`.
    pub y_plus: S,
    /// The competitor source.
    pub x_prime: S,
    /// The competitor's interior target.
    pub y_prime: S,
    /// Smallest margin across the pattern's comparisons; reported matches
    /// have `slack > tol`.
    pub slack: S,
}

/// Scanner refusal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructureError {
    /// Support too rich: the scan would exceed [`SCAN_CAP`] checks.
    /// Coarsen the instance instead.
    SupportTooLarge {
        /// Estimated elementary checks.
        combinations: u64,
    },
}

impl fmt::Display for StructureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureError::SupportTooLarge { combinations } => write!(
                f,
                "support scan of {combinations} combinations exceeds cap {SCAN_CAP}"
            ),
        }
    }
}

/// Rows of a coupling support: per source, its targets with masses.
fn rows_of<S: Scalar>(coupling: &Coupling<S>) -> Vec<(S, Vec<(S, S)>)> {
    let mut rows: Vec<(S, Vec<(S, S)>)> = Vec::new();
    for (x, y, w) in coupling.iter() {
        match rows.last_mut() {
            Some((rx, targets)) if rx == x => targets.push((y.clone(), w.clone())),
            _ => rows.push((x.clone(), vec![(y.clone(), w.clone())])),
        }
    }
    rows
}

/// Scan the support for patterns forbidden at optimality. Every
/// comparison in a pattern must hold with margin `> tol` for a match to
/// be reported.
pub fn forbidden_constellations<S: Scalar>(
    coupling: &Coupling<S>,
    direction: Direction,
    tol: &S,
) -> Result<Vec<ConstellationViolation<S>>, StructureError> {
    let rows = rows_of(coupling);
    let points: Vec<(S, S)> = coupling
        .iter()
        .map(|(x, y, _)| (x.clone(), y.clone()))
        .collect();

    let mut combinations: u64 = 0;
    for (_, targets) in &rows {
        let t = targets.len() as u64;
        combinations = combinations.saturating_add(t * t.saturating_sub(1) / 2);
    }
    combinations = combinations.saturating_mul(points.len() as u64);
    if combinations > SCAN_CAP {
        return Err(StructureError::SupportTooLarge { combinations });
    }

    let rules = RuleId::rules_for(direction);
    let mut out = Vec::new();
    for (x, targets) in &rows {
        for a in 0..targets.len() {
            for b in a + 1..targets.len() {
                // Targets are sorted ascending within a row.
                let ym = &targets[a].0;
                let yp = &targets[b].0;
                for (xp, yq) in &points {
                    if xp == x {
                        continue;
                    }
                    for rule in rules {
                        let slack = pattern_slack(*rule, x, ym, yp, xp, yq);
                        if slack > *tol {
                            out.push(ConstellationViolation {
                                rule: *rule,
                                x: x.clone(),
                                y_minus: ym.clone(),
                                y_plus: yp.clone(),
                                x_prime: xp.clone(),
                                y_prime: yq.clone(),
                                slack,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Minimum margin over the rule's comparisons, margins oriented so that
/// positive means the comparison holds.
fn pattern_slack<S: Scalar>(rule: RuleId, x: &S, ym: &S, yp: &S, xp: &S, yq: &S) -> S {
    let neg = |v: &S| S::zero() - v.clone();
    let mut margins: Vec<S> = vec![
        yq.clone() - ym.clone(), // y- < y'
        yp.clone() - yq.clone(), // y' < y+
    ];
    match rule {
        RuleId::MinStraddleRight => {
            margins.push(neg(x) - ym.clone()); // y- < -x
            margins.push(yp.clone() - neg(x)); // -x < y+
            margins.push(yq.clone() - neg(x)); // -x < y'
            margins.push(xp.clone() - x.clone()); // x < x'
        }
        RuleId::MinStraddleLeft => {
            margins.push(neg(x) - ym.clone());
            margins.push(yp.clone() - neg(x));
            margins.push(neg(x) - yq.clone()); // y' < -x
            margins.push(x.clone() - xp.clone()); // x' < x
        }
        RuleId::MinNestedInterior => {
            margins.push(xp.clone() - x.clone()); // -x' < -x, i.e. x < x'
            margins.push(ym.clone() - neg(x)); // -x <= y-
        }
        RuleId::MaxStraddleRight => {
            margins.push(neg(xp) - ym.clone()); // y- < -x'
            margins.push(yp.clone() - neg(xp)); // -x' < y+
            margins.push(neg(xp) - yq.clone()); // y' <= -x'
            margins.push(xp.clone() - x.clone()); // x < x'
        }
        RuleId::MaxStraddleLeft => {
            margins.push(neg(xp) - ym.clone());
            margins.push(yp.clone() - neg(xp));
            margins.push(yq.clone() - neg(xp)); // -x' <= y'
            margins.push(x.clone() - xp.clone()); // x' < x
        }
        RuleId::MaxNestedInterior => {
            margins.push(x.clone() - xp.clone()); // x' < x
            margins.push(ym.clone() - neg(x)); // -x <= y-
        }
        RuleId::MixedLeftHigh => {
            margins.push(x.clone() - xp.clone()); // x' < x
            margins.push(neg(xp) - ym.clone()); // y- < -x'
            margins.push(yq.clone() - neg(xp)); // -x' <= y'
        }
        RuleId::MixedRightLow => {
            margins.push(xp.clone() - x.clone()); // x < x'
            margins.push(neg(xp) - yq.clone()); // y' <= -x'
            margins.push(yp.clone() - neg(xp)); // -x' < y+
        }
        RuleId::MixedLeftNested => {
            margins.push(x.clone() - xp.clone()); // x' < x
            margins.push(ym.clone() - neg(x)); // -x <= y-
            margins.push(neg(xp) - ym.clone()); // y- < -x'
            margins.push(yp.clone() - neg(xp)); // -x' < y+
        }
        RuleId::MixedRightWide => {
            margins.push(xp.clone() - x.clone()); // x < x'
            margins.push(neg(xp) - ym.clone()); // y- < -x'
            margins.push(yp.clone() - neg(xp)); // -x' < y+
            margins.push(neg(x) - yp.clone()); // y+ <= -x
        }
    }
    margins
        .into_iter()
        .reduce(|acc, m| if m < acc { m } else { acc })
        .unwrap()
}

/// The rebalancing gain functions for an enclosing pair around `y`.
///
/// `f(t)` is the cost of splitting unit mass at `t` onto `-y_minus` and
/// `-y_plus` reflections... precisely: with `lambda` chosen so that
/// `y = (1-lambda) y_minus + lambda y_plus`,
/// `f(t) = (1-lambda)|t+y_minus| + lambda|t+y_plus| - |t+y|`, the change
/// in `|x+y|`-cost from replacing the direct target by the mean-matched
/// pair. Convexity gives `f >= 0`, and `f` vanishes outside
/// `(-y_plus, -y_minus)`. `g` is the same with targets weighted by their
/// squares, the tie-break cost.
#[derive(Clone, Debug)]
pub struct Wedge<S> {
    y_minus: S,
    y: S,
    y_plus: S,
    lambda: S,
}

/// Invalid enclosing pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WedgeOrderError;

impl fmt::Display for WedgeOrderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("wedge requires y_minus < y < y_plus")
    }
}

impl<S: Scalar> Wedge<S> {
    /// Build for `y_minus < y < y_plus`.
    pub fn new(y_minus: S, y: S, y_plus: S) -> Result<Self, WedgeOrderError> {
        if !(y_minus < y && y < y_plus) {
            return Err(WedgeOrderError);
        }
        let lambda = (y.clone() - y_minus.clone()) / (y_plus.clone() - y_minus.clone());
        Ok(Wedge {
            y_minus,
            y,
            y_plus,
            lambda,
        })
    }

    /// Interpolation weight of the upper target.
    pub fn lambda(&self) -> &S {
        &self.lambda
    }

    fn split(&self, t: &S, weight_minus: S, weight_plus: S, weight_mid: S) -> S {
        let one_minus = S::one() - self.lambda.clone();
        one_minus * (t.clone() + self.y_minus.clone()).abs() * weight_minus
            + self.lambda.clone() * (t.clone() + self.y_plus.clone()).abs() * weight_plus
            - (t.clone() + self.y.clone()).abs() * weight_mid
    }

    /// Primary gain at source `t`; nonnegative everywhere.
    pub fn f(&self, t: &S) -> S {
        self.split(t, S::one(), S::one(), S::one())
    }

    /// Square-weighted gain at source `t` (tie-break cost).
    pub fn g(&self, t: &S) -> S {
        self.split(
            t,
            self.y_minus.clone() * self.y_minus.clone(),
            self.y_plus.clone() * self.y_plus.clone(),
            self.y.clone() * self.y.clone(),
        )
    }
}

/// Classified support row of one source atom.
#[derive(Clone, Debug)]
pub struct RowClassification<S> {
    /// The source.
    pub x: S,
    /// Largest non-reflection target and its mass.
    pub upper: Option<(S, S)>,
    /// Smallest non-reflection target and its mass (absent when the row
    /// has fewer than two non-reflection targets).
    pub lower: Option<(S, S)>,
    /// Mass within `diag_tol` of the reflection `y = -x`.
    pub diagonal_mass: S,
    /// Interior non-reflection targets beyond the two extremes.
    pub residual: Vec<(S, S)>,
}

impl<S: Scalar> RowClassification<S> {
    /// Total classified mass of the row (equals the row's coupling mass).
    pub fn mass(&self) -> S {
        let mut m = self.diagonal_mass.clone();
        if let Some((_, w)) = &self.upper {
            m = m + w.clone();
        }
        if let Some((_, w)) = &self.lower {
            m = m + w.clone();
        }
        for (_, w) in &self.residual {
            m = m + w.clone();
        }
        m
    }
}

/// Branch classification of a coupling's support.
#[derive(Clone, Debug)]
pub struct SupportStructure<S> {
    /// Rows sorted by source.
    pub rows: Vec<RowClassification<S>>,
    /// Reflection tolerance used.
    pub diag_tol: S,
}

impl<S: Scalar> SupportStructure<S> {
    /// Mass left unclassified (interior extra targets).
    pub fn residual_mass(&self) -> S {
        self.rows.iter().fold(S::zero(), |acc, r| {
            r.residual
                .iter()
                .fold(acc, |acc, (_, w)| acc + w.clone())
        })
    }

    /// Mass on the reflection branch.
    pub fn diagonal_mass(&self) -> S {
        self.rows
            .iter()
            .fold(S::zero(), |acc, r| acc + r.diagonal_mass.clone())
    }

    /// Total classified mass.
    pub fn total_mass(&self) -> S {
        self.rows
            .iter()
            .fold(S::zero(), |acc, r| acc + r.mass())
    }
}

/// Classify each row of the support: targets within `diag_tol` of the
/// reflection `y = -x` go to the diagonal branch; of the rest, the
/// largest is the upper target and the smallest the lower (a single
/// non-reflection target counts as upper); anything between the two
/// extremes is residual.
pub fn extract_support<S: Scalar>(coupling: &Coupling<S>, diag_tol: &S) -> SupportStructure<S> {
    let mut rows = Vec::new();
    for (x, targets) in rows_of(coupling) {
        let mut diagonal_mass = S::zero();
        let mut rest: Vec<(S, S)> = Vec::new();
        for (y, w) in targets {
            if (y.clone() + x.clone()).abs() <= *diag_tol {
                diagonal_mass = diagonal_mass + w;
            } else {
                rest.push((y, w));
            }
        }
        // Targets arrive sorted ascending.
        let upper = rest.pop();
        let lower = if rest.is_empty() {
            None
        } else {
            Some(rest.remove(0))
        };
        rows.push(RowClassification {
            x,
            upper,
            lower,
            diagonal_mass,
            residual: rest,
        });
    }
    SupportStructure {
        rows,
        diag_tol: diag_tol.clone(),
    }
}

/// An out-of-order pair of upper targets.
#[derive(Clone, Debug)]
pub struct MonotonicityBreach<S> {
    /// Left source.
    pub x_left: S,
    /// Right source.
    pub x_right: S,
    /// Upper target at the left source.
    pub upper_left: S,
    /// Upper target at the right source.
    pub upper_right: S,
}

/// Check the upper graph's monotonicity: non-decreasing for minimizers,
/// non-increasing for maximizers, comparisons relaxed by `tol`.
pub fn check_structure<S: Scalar>(
    structure: &SupportStructure<S>,
    direction: Direction,
    tol: &S,
) -> Vec<MonotonicityBreach<S>> {
    let mut out = Vec::new();
    let uppers: Vec<(S, S)> = structure
        .rows
        .iter()
        .filter_map(|r| r.upper.as_ref().map(|(y, _)| (r.x.clone(), y.clone())))
        .collect();
    for i in 0..uppers.len() {
        for j in i + 1..uppers.len() {
            let (xl, ul) = &uppers[i];
            let (xr, ur) = &uppers[j];
            let breach = match direction {
                Direction::Minimize => ul.clone() > ur.clone() + tol.clone(),
                Direction::Maximize => ur.clone() > ul.clone() + tol.clone(),
            };
            if breach {
                out.push(MonotonicityBreach {
                    x_left: xl.clone(),
                    x_right: xr.clone(),
                    upper_left: ul.clone(),
                    upper_right: ur.clone(),
                });
            }
        }
    }
    out
}

/// Split a coupling at `x = 0`: the right part keeps sources `x >= 0`
/// as-is; the left part (sources `x < 0`) is rotated by a half turn,
/// `(x, y) -> (-x, -y)`, which maps it into the nonnegative-source normal
/// form. Masses are preserved, so the parts are unnormalized.
pub fn halfplane_split<S: Scalar>(coupling: &Coupling<S>) -> (Coupling<S>, Coupling<S>) {
    let mut right = Vec::new();
    let mut left = Vec::new();
    for (x, y, w) in coupling.iter() {
        if *x >= S::zero() {
            right.push((x.clone(), y.clone(), w.clone()));
        } else {
            left.push((S::zero() - x.clone(), S::zero() - y.clone(), w.clone()));
        }
    }
    (Coupling::from_points(right), Coupling::from_points(left))
}

/// Undo [`halfplane_split`]: rotate the left part back and merge.
pub fn recombine<S: Scalar>(right: &Coupling<S>, rotated_left: &Coupling<S>) -> Coupling<S> {
    let mut points: Vec<(S, S, S)> = right
        .iter()
        .map(|(x, y, w)| (x.clone(), y.clone(), w.clone()))
        .collect();
    for (x, y, w) in rotated_left.iter() {
        points.push((S::zero() - x.clone(), S::zero() - y.clone(), w.clone()));
    }
    Coupling::from_points(points)
}
