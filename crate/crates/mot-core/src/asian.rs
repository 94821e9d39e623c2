//! Bounds for continuously averaged Asian payoffs, built from discrete
//! models.
//!
//! The payoff is a convex function of the time average of a martingale
//! path. With only the terminal law known, the extremal prices are the
//! payoff at the initial value (stay flat, jump at the end) and the
//! terminal expectation (jump at once); [`one_marginal_bounds`] returns
//! both and [`superhedge_audit`] certifies the upper one pathwise on any
//! grid path. Jump models are first-class: [`approx_jump_model`] replaces
//! a single jump by a short two-point bridge and certifies the exact L1
//! distance to the idealized average against the `E|Y|/(nT)` bound. With
//! two known marginal laws, [`two_marginal_candidate_bounds`] computes the
//! transport-optimal upper candidate, while [`constancy_counterexample`]
//! shows the analogous lower candidate is genuinely invalid: an explicit
//! model undercuts it. [`conjecture_harness`] stress-tests the upper
//! candidate against randomly sampled three-step models; for call payoffs
//! a violation would expose an implementation bug, for general convex
//! payoffs it would be a real finding on an open question.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::lp::Direction;
use crate::measure::DiscreteMeasure;
use crate::mot::{random_vertex_coupling, solve_two_step, Coupling, MotError};
use crate::scalar::{eq_tol, ratio, Scalar};

/// Invalid convex piecewise-linear payoff specification.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiError<S> {
    /// No breakpoints given.
    NoBreakpoints,
    /// Breakpoints not strictly increasing.
    UnorderedBreakpoints,
    /// A coordinate is NaN or infinite.
    NonFinite,
    /// Slopes decrease somewhere, so the function is not convex.
    NotConvex {
        /// Breakpoint where the slope drops.
        position: S,
    },
}

impl<S: fmt::Display> fmt::Display for PhiError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiError::NoBreakpoints => write!(f, "payoff needs at least one breakpoint"),
            PhiError::UnorderedBreakpoints => {
                write!(f, "payoff breakpoints must be strictly increasing")
            }
            PhiError::NonFinite => write!(f, "payoff data must be finite"),
            PhiError::NotConvex { position } => {
                write!(f, "payoff slope drops at {position}: not convex")
            }
        }
    }
}

/// Failure of an averaged-payoff computation.
#[derive(Clone, Debug)]
pub enum AsianError<S> {
    /// Bad payoff specification.
    Phi(PhiError<S>),
    /// Underlying transport solve failed.
    Mot(MotError<S>),
    /// Bad time grid or path data.
    Grid(&'static str),
    /// The joint law is not a probability martingale coupling.
    NotMartingale {
        /// Largest barycenter defect found.
        defect: S,
    },
    /// Bridge width `1/n` reaches back past time zero.
    BridgeTooCoarse {
        /// Jump time.
        t1: S,
        /// Requested bridge fineness.
        n: u32,
    },
    /// The bridge gap exceeded its certified bound. Must never occur.
    GapBoundExceeded {
        /// Exact L1 distance found.
        gap: S,
        /// The `E|Y|/(nT)` bound it had to obey.
        bound: S,
    },
}

impl<S: fmt::Display> fmt::Display for AsianError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsianError::Phi(e) => write!(f, "{e}"),
            AsianError::Mot(e) => write!(f, "transport solve failed: {e}"),
            AsianError::Grid(what) => write!(f, "bad grid: {what}"),
            AsianError::NotMartingale { defect } => {
                write!(f, "joint law is not a martingale coupling (defect {defect})")
            }
            AsianError::BridgeTooCoarse { t1, n } => {
                write!(f, "bridge of width 1/{n} starts before time zero (jump at {t1})")
            }
            AsianError::GapBoundExceeded { gap, bound } => {
                write!(f, "bridge gap {gap} exceeds certified bound {bound}")
            }
        }
    }
}

impl<S> From<PhiError<S>> for AsianError<S> {
    fn from(e: PhiError<S>) -> Self {
        AsianError::Phi(e)
    }
}

impl<S> From<MotError<S>> for AsianError<S> {
    fn from(e: MotError<S>) -> Self {
        AsianError::Mot(e)
    }
}

/// Convex piecewise-linear payoff: finitely many kinks with values, a
/// slope left of the first kink and a slope right of the last.
#[derive(Clone, Debug)]
pub struct PiecewisePhi<S> {
    kinks: Vec<S>,
    values: Vec<S>,
    slope_left: S,
    slope_right: S,
    secants: Vec<S>,
}

impl<S: Scalar> PiecewisePhi<S> {
    /// Build from `(x, value)` breakpoints plus the two outer slopes.
    /// Convexity demands the full slope sequence be nondecreasing.
    pub fn from_breakpoints(
        points: Vec<(S, S)>,
        slope_left: S,
        slope_right: S,
    ) -> Result<Self, PhiError<S>> {
        if points.is_empty() {
            return Err(PhiError::NoBreakpoints);
        }
        for (x, v) in &points {
            if !x.to_f64().is_finite() || !v.to_f64().is_finite() {
                return Err(PhiError::NonFinite);
            }
        }
        if !slope_left.to_f64().is_finite() || !slope_right.to_f64().is_finite() {
            return Err(PhiError::NonFinite);
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PhiError::UnorderedBreakpoints);
            }
        }
        let (kinks, values): (Vec<S>, Vec<S>) = points.into_iter().unzip();
        let secants: Vec<S> = kinks
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| (v[1].clone() - v[0].clone()) / (x[1].clone() - x[0].clone()))
            .collect();
        let mut prev = slope_left.clone();
        for (s, x) in secants.iter().zip(kinks.iter()) {
            if *s < prev {
                return Err(PhiError::NotConvex {
                    position: x.clone(),
                });
            }
            prev = s.clone();
        }
        if slope_right < prev {
            return Err(PhiError::NotConvex {
                position: kinks.last().expect("nonempty").clone(),
            });
        }
        Ok(PiecewisePhi {
            kinks,
            values,
            slope_left,
            slope_right,
            secants,
        })
    }

    /// The call payoff `(x - strike)_+`.
    pub fn call(strike: S) -> Self {
        PiecewisePhi::from_breakpoints(vec![(strike, S::zero())], S::zero(), S::one())
            .expect("a call is convex")
    }

    /// The absolute deviation `|x - center|`.
    pub fn abs_dev(center: S) -> Self {
        PiecewisePhi::from_breakpoints(vec![(center, S::zero())], -S::one(), S::one())
            .expect("absolute deviation is convex")
    }

    /// Kink positions.
    pub fn kinks(&self) -> &[S] {
        &self.kinks
    }

    /// Evaluate at `x`.
    pub fn eval(&self, x: &S) -> S {
        if *x <= self.kinks[0] {
            return self.values[0].clone()
                + self.slope_left.clone() * (x.clone() - self.kinks[0].clone());
        }
        for j in 0..self.secants.len() {
            if *x <= self.kinks[j + 1] {
                return self.values[j].clone()
                    + self.secants[j].clone() * (x.clone() - self.kinks[j].clone());
            }
        }
        let m = self.kinks.len() - 1;
        self.values[m].clone() + self.slope_right.clone() * (x.clone() - self.kinks[m].clone())
    }

    /// Left derivative at `x`: the slope of the piece ending at `x`. A
    /// subgradient everywhere, which makes hedges deterministic.
    pub fn left_slope(&self, x: &S) -> S {
        if *x <= self.kinks[0] {
            return self.slope_left.clone();
        }
        for j in 0..self.secants.len() {
            if *x <= self.kinks[j + 1] {
                return self.secants[j].clone();
            }
        }
        self.slope_right.clone()
    }

    /// Largest slope magnitude; slopes are monotone so only the outer two
    /// matter.
    pub fn max_abs_slope(&self) -> S {
        let l = self.slope_left.abs();
        let r = self.slope_right.abs();
        if l > r {
            l
        } else {
            r
        }
    }
}

/// Sharp robust price bounds for a convex payoff of the path average when
/// only the terminal law is known: stay flat and jump at the end (payoff
/// of the initial value) versus jump at once (terminal expectation).
pub fn one_marginal_bounds<S: Scalar>(
    nu: &DiscreteMeasure<S>,
    phi: &PiecewisePhi<S>,
) -> (S, S) {
    (phi.eval(&nu.mean()), nu.expectation(|x| phi.eval(x)))
}

/// Piecewise-constant right-continuous path on a finite grid.
#[derive(Clone, Debug)]
pub struct DiscretePath<S> {
    times: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> DiscretePath<S> {
    /// Build from grid times (strictly increasing from zero) and values.
    pub fn new(times: Vec<S>, values: Vec<S>) -> Result<Self, AsianError<S>> {
        if times.len() != values.len() {
            return Err(AsianError::Grid("one value per grid time"));
        }
        if times.len() < 2 {
            return Err(AsianError::Grid("need at least two grid times"));
        }
        if !times[0].is_zero() {
            return Err(AsianError::Grid("grid must start at time zero"));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(AsianError::Grid("grid times must strictly increase"));
            }
        }
        for v in times.iter().chain(values.iter()) {
            if !v.to_f64().is_finite() {
                return Err(AsianError::Grid("path data must be finite"));
            }
        }
        Ok(DiscretePath { times, values })
    }

    /// Grid times.
    pub fn times(&self) -> &[S] {
        &self.times
    }

    /// Path values per grid time.
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Final grid time.
    pub fn horizon(&self) -> S {
        self.times.last().expect("validated nonempty").clone()
    }

    /// Terminal value.
    pub fn terminal(&self) -> S {
        self.values.last().expect("validated nonempty").clone()
    }

    /// Exact time average: the final value holds for zero time, so it
    /// does not enter.
    pub fn average(&self) -> S {
        let mut acc = S::zero();
        for k in 0..self.times.len() - 1 {
            acc = acc
                + self.values[k].clone() * (self.times[k + 1].clone() - self.times[k].clone());
        }
        acc / self.horizon()
    }
}

/// A pathwise hedge for the averaged payoff: a static position paying the
/// payoff of the terminal value plus a self-financing position in the
/// asset whose integrand accumulates the scaled payoff slope.
#[derive(Clone, Debug)]
pub struct HedgePlan<S> {
    /// Payoff of the terminal value (the static leg's payout).
    pub terminal_payoff: S,
    /// Trading integrand at each grid time: `H_t` is `1/T` times the
    /// running integral of the payoff's left slope along the path.
    pub integrand: Vec<S>,
}

/// Run the superhedge on one path: the static leg minus the trading gains
/// must dominate the payoff of the exact average. Returns the plan and the
/// slack `phi(X_T) - sum_j H_{t_j} (X_{t_j} - X_{t_{j-1}}) - phi(avg)`,
/// which is nonnegative for every path by convexity.
pub fn superhedge_audit<S: Scalar>(
    phi: &PiecewisePhi<S>,
    path: &DiscretePath<S>,
) -> (HedgePlan<S>, S) {
    let horizon = path.horizon();
    let times = path.times();
    let values = path.values();
    let mut integrand = Vec::with_capacity(times.len());
    integrand.push(S::zero());
    let mut gain = S::zero();
    for k in 1..times.len() {
        let h = integrand[k - 1].clone()
            + phi.left_slope(&values[k - 1]) * (times[k].clone() - times[k - 1].clone())
                / horizon.clone();
        gain = gain + h.clone() * (values[k].clone() - values[k - 1].clone());
        integrand.push(h);
    }
    let terminal_payoff = phi.eval(&path.terminal());
    let slack = terminal_payoff.clone() - gain - phi.eval(&path.average());
    (
        HedgePlan {
            terminal_payoff,
            integrand,
        },
        slack,
    )
}

/// Discrete stand-in for a continuous-path martingale with one jump: hold
/// `X` until `t1 - 1/n`, bridge through a two-point median split `B` of
/// the conditional terminal law, then hold `Y`. The average then differs
/// from the idealized `(t1 X + (T - t1) Y) / T` by `(B - X) / (nT)` only.
#[derive(Clone, Debug)]
pub struct JumpBridge<S> {
    /// Jump time.
    pub t1: S,
    /// Final time.
    pub horizon: S,
    /// Bridge fineness: the bridge occupies `[t1 - 1/n, t1)`.
    pub n: u32,
    /// Weighted triples `(x, bridge, y, mass)`; a martingale in both
    /// steps.
    pub paths: Vec<(S, S, S, S)>,
    /// Exact L1 distance between the model average and the idealized
    /// average.
    pub l1_gap: S,
    /// The certified bound `E|Y| / (nT)` the gap obeys.
    pub gap_bound: S,
}

impl<S: Scalar> JumpBridge<S> {
    /// Time average of the triple `(x, b, y)` under this grid.
    fn average(&self, x: &S, b: &S, y: &S) -> S {
        let inv_n = ratio::<S>(1, i64::from(self.n));
        let head = self.t1.clone() - inv_n.clone();
        let tail = self.horizon.clone() - self.t1.clone();
        (x.clone() * head + b.clone() * inv_n + y.clone() * tail) / self.horizon.clone()
    }

    /// Expected payoff of the model average.
    pub fn expected_payoff(&self, phi: &PiecewisePhi<S>) -> S {
        self.paths.iter().fold(S::zero(), |acc, (x, b, y, m)| {
            acc + phi.eval(&self.average(x, b, y)) * m.clone()
        })
    }

    /// Expected payoff of the idealized no-bridge average.
    pub fn target_payoff(&self, phi: &PiecewisePhi<S>) -> S {
        let tail = self.horizon.clone() - self.t1.clone();
        self.paths.iter().fold(S::zero(), |acc, (x, _, y, m)| {
            let arg = (self.t1.clone() * x.clone() + tail.clone() * y.clone())
                / self.horizon.clone();
            acc + phi.eval(&arg) * m.clone()
        })
    }

    /// Law of the model average.
    pub fn average_law(&self) -> DiscreteMeasure<S> {
        DiscreteMeasure::new(
            self.paths
                .iter()
                .map(|(x, b, y, m)| (self.average(x, b, y), m.clone()))
                .collect(),
        )
        .expect("bridge masses sum to one")
    }
}

/// Group coupling entries into rows sharing a first coordinate.
fn coupling_rows<S: Scalar>(c: &Coupling<S>) -> Vec<(S, Vec<(S, S)>)> {
    let mut rows: Vec<(S, Vec<(S, S)>)> = Vec::new();
    for (x, y, m) in c.iter() {
        match rows.last_mut() {
            Some((rx, row)) if rx == x => row.push((y.clone(), m.clone())),
            _ => rows.push((x.clone(), vec![(y.clone(), m.clone())])),
        }
    }
    rows
}

/// Half of a conditional law together with its mean.
type Piece<S> = (Vec<(S, S)>, S);

/// Cut a row at half its mass (splitting the straddling atom) and return
/// the lower and upper pieces with their means. The means are the two
/// bridge values; cutting at the median (not at the row's mean) minimizes
/// the mean absolute deviation, which is what the gap bound needs.
fn median_split<S: Scalar>(row: &[(S, S)]) -> (Piece<S>, Piece<S>) {
    let total = row
        .iter()
        .fold(S::zero(), |acc, (_, m)| acc + m.clone());
    let half = total / (S::one() + S::one());
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut acc = S::zero();
    for (y, m) in row {
        let next = acc.clone() + m.clone();
        if next <= half {
            lower.push((y.clone(), m.clone()));
        } else if acc >= half {
            upper.push((y.clone(), m.clone()));
        } else {
            let to_lower = half.clone() - acc;
            if !to_lower.is_zero() {
                lower.push((y.clone(), to_lower.clone()));
            }
            let to_upper = m.clone() - to_lower;
            if !to_upper.is_zero() {
                upper.push((y.clone(), to_upper));
            }
        }
        acc = next;
    }
    let mean = |piece: &[(S, S)]| -> S {
        let mass = piece
            .iter()
            .fold(S::zero(), |acc, (_, m)| acc + m.clone());
        let moment = piece
            .iter()
            .fold(S::zero(), |acc, (y, m)| acc + y.clone() * m.clone());
        moment / mass
    };
    let lower_mean = mean(&lower);
    let upper_mean = mean(&upper);
    ((lower, lower_mean), (upper, upper_mean))
}

/// Replace the jump of a two-step martingale coupling at `t1` by a
/// two-point bridge of width `1/n` and certify the exact L1 distance
/// between the resulting average and the idealized one against the
/// `E|Y| / (n T)` bound.
pub fn approx_jump_model<S: Scalar>(
    coupling: &Coupling<S>,
    t1: S,
    horizon: S,
    n: u32,
) -> Result<JumpBridge<S>, AsianError<S>> {
    if !(S::zero() < t1 && t1 < horizon) {
        return Err(AsianError::Grid("need 0 < t1 < horizon"));
    }
    if n == 0 {
        return Err(AsianError::BridgeTooCoarse { t1, n });
    }
    let inv_n = ratio::<S>(1, i64::from(n));
    if t1.clone() - inv_n.clone() <= S::zero() {
        return Err(AsianError::BridgeTooCoarse { t1, n });
    }
    let tol = S::default_tol();
    if !eq_tol(&coupling.mass(), &S::one(), &tol) {
        return Err(AsianError::Grid("coupling mass must be one"));
    }
    let defect = coupling.martingale_defect();
    if defect > tol {
        return Err(AsianError::NotMartingale { defect });
    }

    let mut paths = Vec::new();
    let mut deviation = S::zero();
    for (x, row) in coupling_rows(coupling) {
        let (lower, upper) = median_split(&row);
        for (piece, b) in [lower, upper] {
            for (y, m) in piece {
                deviation = deviation + (b.clone() - x.clone()).abs() * m.clone();
                paths.push((x.clone(), b.clone(), y, m));
            }
        }
    }
    let scale = inv_n / horizon.clone();
    let l1_gap = deviation * scale.clone();
    let abs_y = coupling
        .iter()
        .fold(S::zero(), |acc, (_, y, m)| acc + y.abs() * m.clone());
    let gap_bound = abs_y * scale;
    if l1_gap > gap_bound.clone() + tol {
        return Err(AsianError::GapBoundExceeded {
            gap: l1_gap,
            bound: gap_bound,
        });
    }
    Ok(JumpBridge {
        t1,
        horizon,
        n,
        paths,
        l1_gap,
        gap_bound,
    })
}

/// The exact fixture beating the stay-constant lower candidate: marginals
/// `(d_-2 + d_-1 + d_1 + d_2)/4` at both dates, a joint law `(Y, Z)` whose
/// model prices the payoff `|integral of the path|` at `41/28`, strictly
/// below the stay-constant candidate `3/2`.
#[derive(Clone, Debug)]
pub struct CounterexampleReport<S> {
    /// The joint law of `(Y, Z)`.
    pub joint: Coupling<S>,
    /// Model price of the unnormalized averaged payoff.
    pub model_price: S,
    /// Stay-constant candidate for the same payoff.
    pub constancy_price: S,
    /// Model price under the time-normalized average.
    pub normalized_model_price: S,
    /// Stay-constant candidate under the time-normalized average.
    pub normalized_constancy_price: S,
    /// Whether the model strictly undercuts the candidate.
    pub undercuts: bool,
    /// Whether `Law(Y)` equals the first prescribed marginal. It does
    /// not: the model holds `Y` on the open interval before the first
    /// date and jumps exactly at it, so only the prescribed-date laws
    /// match.
    pub y_has_first_marginal: bool,
    /// Whether `Law(Z)` equals the second prescribed marginal.
    pub z_has_second_marginal: bool,
    /// Exact barycenter defect of the joint law.
    pub martingale_defect: S,
}

/// Marginals shared by both dates of the counterexample fixture.
pub fn counterexample_marginal<S: Scalar>() -> DiscreteMeasure<S> {
    let q = ratio::<S>(1, 4);
    DiscreteMeasure::new(vec![
        (ratio::<S>(-2, 1), q.clone()),
        (ratio::<S>(-1, 1), q.clone()),
        (ratio::<S>(1, 1), q.clone()),
        (ratio::<S>(2, 1), q),
    ])
    .expect("four quarter weights")
}

/// Build the counterexample model exactly and verify its claims: the
/// two-date scheme that stays flat between the prescribed dates is not a
/// valid lower bound, because this model prices the payoff strictly lower.
pub fn constancy_counterexample<S: Scalar>() -> CounterexampleReport<S> {
    let joint = Coupling::from_points(vec![
        (ratio::<S>(1, 4), ratio::<S>(-1, 1), ratio::<S>(1, 4)),
        (ratio::<S>(-1, 4), ratio::<S>(1, 1), ratio::<S>(1, 4)),
        (ratio::<S>(1, 4), ratio::<S>(2, 1), ratio::<S>(5, 28)),
        (ratio::<S>(-1, 4), ratio::<S>(-2, 1), ratio::<S>(5, 28)),
        (ratio::<S>(0, 1), ratio::<S>(2, 1), ratio::<S>(1, 14)),
        (ratio::<S>(0, 1), ratio::<S>(-2, 1), ratio::<S>(1, 14)),
    ]);
    let marginal = counterexample_marginal::<S>();
    let tol = S::default_tol();
    let same = |m: &DiscreteMeasure<S>| -> bool {
        m.len() == marginal.len()
            && m.iter()
                .zip(marginal.iter())
                .all(|((a, wa), (b, wb))| eq_tol(a, b, &tol) && eq_tol(wa, wb, &tol))
    };
    let y_law = DiscreteMeasure::new(
        joint
            .x_atoms()
            .iter()
            .cloned()
            .zip(joint.x_weights())
            .collect(),
    )
    .expect("fixture masses sum to one");
    let z_law = joint.y_marginal().expect("fixture masses sum to one");
    let model_price = joint.cost(|y, z| (y.clone() + z.clone()).abs());
    let constancy_price = marginal.abs_moment(1);
    let half = ratio::<S>(1, 2);
    CounterexampleReport {
        normalized_model_price: model_price.clone() * half.clone(),
        normalized_constancy_price: constancy_price.clone() * half,
        undercuts: model_price < constancy_price,
        y_has_first_marginal: same(&y_law),
        z_has_second_marginal: same(&z_law),
        martingale_defect: joint.martingale_defect(),
        joint,
        model_price,
        constancy_price,
    }
}

/// Lower-side note attached to [`two_marginal_candidate_bounds`]: the
/// stay-constant-then-jump scheme prices the payoff at `heuristic`, but
/// that number is not a valid lower bound — [`constancy_counterexample`]
/// exhibits a consistent model strictly below it. The only generally
/// valid floor reported is the payoff at the initial value.
#[derive(Clone, Debug)]
pub struct MinCandidateNote<S> {
    /// Value of the stay-constant scheme; a heuristic, not a bound.
    pub heuristic: S,
    /// Payoff at the mean: the unconditional floor.
    pub floor: S,
}

/// Candidate bounds with both marginal laws known.
#[derive(Clone, Debug)]
pub struct TwoMarginalBounds<S> {
    /// Transport-optimal upper candidate for the averaged payoff.
    pub max_candidate: S,
    /// The coupling attaining it.
    pub max_coupling: Coupling<S>,
    /// Lower-side report; see [`MinCandidateNote`].
    pub min_note: MinCandidateNote<S>,
}

/// Compute the conjectured-sharp upper candidate: maximize the payoff of
/// the normalized average `(t1 x + (T - t1) y) / T` over martingale
/// couplings of the two marginals. The lower side only gets a note.
pub fn two_marginal_candidate_bounds<S: Scalar>(
    mu1: &DiscreteMeasure<S>,
    mu2: &DiscreteMeasure<S>,
    t1: S,
    horizon: S,
    phi: &PiecewisePhi<S>,
) -> Result<TwoMarginalBounds<S>, AsianError<S>> {
    if !(S::zero() < t1 && t1 < horizon) {
        return Err(AsianError::Grid("need 0 < t1 < horizon"));
    }
    let tail = horizon.clone() - t1.clone();
    let scale = |x: &S, y: &S| -> S {
        (t1.clone() * x.clone() + tail.clone() * y.clone()) / horizon.clone()
    };
    let sol = solve_two_step(
        mu1,
        mu2,
        |x, y| phi.eval(&scale(x, y)),
        Direction::Maximize,
    )?;
    let mean = mu1.mean();
    let heuristic = mu1.expectation(|x| phi.eval(&scale(&mean, x)));
    let floor = phi.eval(&scale(&mean, &mean));
    Ok(TwoMarginalBounds {
        max_candidate: sol.value,
        max_coupling: sol.coupling,
        min_note: MinCandidateNote { heuristic, floor },
    })
}

/// A finitely supported three-step martingale `(X_t, X_1, X_2)`.
#[derive(Clone, Debug)]
pub struct ThreeStepModel<S> {
    /// The three observation times.
    pub times: (S, S, S),
    /// Weighted triples `(root, middle, terminal, mass)`.
    pub paths: Vec<(S, S, S, S)>,
}

impl<S: Scalar> ThreeStepModel<S> {
    /// Total mass.
    pub fn mass(&self) -> S {
        self.paths
            .iter()
            .fold(S::zero(), |acc, (_, _, _, m)| acc + m.clone())
    }

    /// Expectation of a function of the triple.
    pub fn expected(&self, f: impl Fn(&S, &S, &S) -> S) -> S {
        self.paths
            .iter()
            .fold(S::zero(), |acc, (r, x, y, m)| acc + f(r, x, y) * m.clone())
    }

    /// Law of one coordinate (0, 1 or 2).
    pub fn marginal(&self, coordinate: usize) -> DiscreteMeasure<S> {
        DiscreteMeasure::new(
            self.paths
                .iter()
                .map(|(r, x, y, m)| {
                    let v = match coordinate {
                        0 => r,
                        1 => x,
                        _ => y,
                    };
                    (v.clone(), m.clone())
                })
                .collect(),
        )
        .expect("model masses sum to one")
    }

    /// Largest barycenter defect over both steps: conditional means of
    /// the middle value given the root, and of the terminal value given
    /// root and middle, must reproduce the conditioning value.
    pub fn martingale_defect(&self) -> S {
        let mut first: Vec<(S, S)> = Vec::new();
        let mut second: Vec<((S, S), S)> = Vec::new();
        for (r, x, y, m) in &self.paths {
            let d1 = (x.clone() - r.clone()) * m.clone();
            match first.iter_mut().find(|(k, _)| k == r) {
                Some((_, acc)) => *acc = acc.clone() + d1,
                None => first.push((r.clone(), d1)),
            }
            let key = (r.clone(), x.clone());
            let d2 = (y.clone() - x.clone()) * m.clone();
            match second.iter_mut().find(|(k, _)| *k == key) {
                Some((_, acc)) => *acc = acc.clone() + d2,
                None => second.push((key, d2)),
            }
        }
        let mut worst = S::zero();
        for (_, d) in first {
            if d.abs() > worst {
                worst = d.abs();
            }
        }
        for (_, d) in second {
            if d.abs() > worst {
                worst = d.abs();
            }
        }
        worst
    }
}

/// Sample a random three-step martingale with middle law `mu` and final
/// law `nu`: adjacent `mu`-atoms are randomly paired and each pair leaks a
/// random fraction of its mass backward to its barycenter (a two-point
/// root split per atom, displaced at most the pair gap), then the forward
/// step couples `mu` to `nu` through a random vertex of the martingale
/// polytope.
pub fn sample_three_step<S: Scalar, R: Rng>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    rng: &mut R,
) -> Result<ThreeStepModel<S>, AsianError<S>> {
    let coupling = random_vertex_coupling(mu, nu, rng)?;
    let xs = mu.atoms();
    let ws = mu.weights();
    let mut branches: Vec<Vec<(S, S)>> = vec![Vec::new(); xs.len()];
    let mut i = 0;
    while i < xs.len() {
        if i + 1 < xs.len() && rng.gen_range(0..2) == 1 {
            let theta = ratio::<S>(rng.gen_range(0..=8), 8);
            let mass = ws[i].clone() + ws[i + 1].clone();
            let bary =
                (ws[i].clone() * xs[i].clone() + ws[i + 1].clone() * xs[i + 1].clone()) / mass;
            for k in [i, i + 1] {
                if !theta.is_zero() {
                    branches[k].push((bary.clone(), theta.clone()));
                }
                let stay = S::one() - theta.clone();
                if !stay.is_zero() {
                    branches[k].push((xs[k].clone(), stay));
                }
            }
            i += 2;
        } else {
            branches[i].push((xs[i].clone(), S::one()));
            i += 1;
        }
    }
    let mut paths = Vec::new();
    for (i, j, m) in coupling.entries() {
        let x = &coupling.x_atoms()[*i as usize];
        let y = &coupling.y_atoms()[*j as usize];
        for (root, frac) in &branches[*i as usize] {
            paths.push((root.clone(), x.clone(), y.clone(), m.clone() * frac.clone()));
        }
    }
    Ok(ThreeStepModel {
        times: (ratio::<S>(1, 2), S::one(), S::one() + S::one()),
        paths,
    })
}

/// One sampled model that beat the transport bound.
#[derive(Clone, Debug)]
pub struct DominationViolation<S> {
    /// Trial index.
    pub trial: usize,
    /// The model's expected payoff.
    pub model_value: S,
    /// `reference - model_value`, negative here.
    pub slack: S,
}

/// Outcome of [`conjecture_harness`].
#[derive(Clone, Debug)]
pub struct ConjectureReport<S> {
    /// The transport-optimal reference value.
    pub reference_value: S,
    /// Number of sampled models.
    pub trials: usize,
    /// Smallest `reference - model_value` seen.
    pub min_slack: S,
    /// Trials whose slack fell below `-tol`.
    pub violations: Vec<DominationViolation<S>>,
}

/// Stress the domination claim: the transport maximum of
/// `phi(X_1 + X_2)` over couplings of `(mu, nu)` should dominate
/// `E[phi(X_t + X_2)]` for every martingale with those laws at the two
/// dates. Samples `trials` random three-step models and reports the
/// smallest slack. For call payoffs a violation means a bug; for other
/// convex payoffs it would be a genuine discovery, so violations are
/// reported, never asserted away.
pub fn conjecture_harness<S: Scalar, R: Rng>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    phi: &PiecewisePhi<S>,
    trials: usize,
    rng: &mut R,
    tol: &S,
) -> Result<ConjectureReport<S>, AsianError<S>> {
    let best = solve_two_step(
        mu,
        nu,
        |x, y| phi.eval(&(x.clone() + y.clone())),
        Direction::Maximize,
    )?;
    let reference_value = best.value;
    let mut min_slack: Option<S> = None;
    let mut violations = Vec::new();
    for trial in 0..trials {
        let model = sample_three_step(mu, nu, rng)?;
        let model_value = model.expected(|r, _, y| phi.eval(&(r.clone() + y.clone())));
        let slack = reference_value.clone() - model_value.clone();
        if slack < -tol.clone() {
            violations.push(DominationViolation {
                trial,
                model_value,
                slack: slack.clone(),
            });
        }
        min_slack = Some(match min_slack {
            Some(s) if s <= slack => s,
            _ => slack,
        });
    }
    Ok(ConjectureReport {
        reference_value,
        trials,
        min_slack: min_slack.unwrap_or_else(S::zero),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::convex_order;
    use crate::mot::{random_convex_pair, solve_path, PathSpec};
    use crate::scalar::{int, Rational};
    use num_traits::{Signed, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn abs_phi() -> PiecewisePhi<Rational> {
        PiecewisePhi::abs_dev(int(0))
    }

    fn two_point() -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(vec![(int(0), ratio(1, 2)), (int(2), ratio(1, 2))]).unwrap()
    }

    #[test]
    fn phi_evaluates_with_left_slopes() {
        let phi = PiecewisePhi::abs_dev(int::<Rational>(1));
        assert_eq!(phi.eval(&int(0)), int(1));
        assert_eq!(phi.eval(&int(1)), int(0));
        assert_eq!(phi.eval(&int(3)), int(2));
        assert_eq!(phi.left_slope(&int(1)), int(-1));
        assert_eq!(phi.left_slope(&ratio(3, 2)), int(1));
        let call = PiecewisePhi::call(int::<Rational>(2));
        assert_eq!(call.eval(&int(1)), int(0));
        assert_eq!(call.eval(&int(4)), int(2));
        assert_eq!(call.left_slope(&int(2)), int(0));
        assert_eq!(call.max_abs_slope(), int(1));
    }

    #[test]
    fn phi_rejects_bad_specs() {
        let concave = PiecewisePhi::from_breakpoints(
            vec![(int::<Rational>(0), int(0)), (int(1), int(2))],
            int(0),
            int(0),
        );
        assert!(matches!(concave, Err(PhiError::NotConvex { .. })));
        let unordered = PiecewisePhi::from_breakpoints(
            vec![(int::<Rational>(1), int(0)), (int(0), int(0))],
            int(-1),
            int(1),
        );
        assert!(matches!(unordered, Err(PhiError::UnorderedBreakpoints)));
        assert!(matches!(
            PiecewisePhi::<Rational>::from_breakpoints(vec![], int(0), int(1)),
            Err(PhiError::NoBreakpoints)
        ));
    }

    #[test]
    fn one_marginal_bounds_match_the_closed_forms() {
        let phi = PiecewisePhi::abs_dev(int::<Rational>(1));
        let (lo, hi) = one_marginal_bounds(&two_point(), &phi);
        assert_eq!(lo, int(0));
        assert_eq!(hi, int(1));
        let point = DiscreteMeasure::dirac(int::<Rational>(3));
        let (lo, hi) = one_marginal_bounds(&point, &phi);
        assert_eq!(lo, int(2));
        assert_eq!(hi, int(2));
    }

    #[test]
    fn one_marginal_bounds_match_a_five_step_transport_oracle() {
        // Five steps, only the final law pinned: the extremes of the
        // average payoff over all grid martingales are the two bounds.
        let nu = two_point();
        let phi = PiecewisePhi::abs_dev(int::<Rational>(1));
        let mut support = nu.atoms().to_vec();
        support.push(nu.mean());
        support.sort_by(|a, b| a.total_cmp(b));
        support.dedup();
        let spec = PathSpec {
            supports: vec![
                support.clone(),
                support.clone(),
                support.clone(),
                support,
                nu.atoms().to_vec(),
            ],
            marginals: vec![None, None, None, None, Some(nu.weights().to_vec())],
        };
        let quarter = ratio::<Rational>(1, 4);
        let payoff = |p: &[Rational]| {
            let avg = (p[0].clone() + p[1].clone() + p[2].clone() + p[3].clone()) * quarter.clone();
            (avg - int::<Rational>(1)).abs()
        };
        let hi = solve_path(&spec, payoff, Direction::Maximize).unwrap();
        let lo = solve_path(&spec, payoff, Direction::Minimize).unwrap();
        let (want_lo, want_hi) = one_marginal_bounds(&nu, &phi);
        assert_eq!(hi.value, want_hi);
        assert_eq!(lo.value, want_lo);
    }

    #[test]
    fn superhedge_matches_the_worked_example() {
        let phi = PiecewisePhi::abs_dev(int::<Rational>(1));
        let path = DiscretePath::new(
            vec![int::<Rational>(0), int(1), int(2)],
            vec![int::<Rational>(0), int(2), int(2)],
        )
        .unwrap();
        assert_eq!(path.average(), int(1));
        let (plan, slack) = superhedge_audit(&phi, &path);
        assert_eq!(plan.integrand, vec![int(0), ratio(-1, 2), int(0)]);
        assert_eq!(slack, int(2));
    }

    #[test]
    fn superhedge_is_tight_on_flat_and_tent_paths() {
        let abs = abs_phi();
        let flat = DiscretePath::new(
            vec![int::<Rational>(0), int(3), int(5)],
            vec![int::<Rational>(2), int(2), int(2)],
        )
        .unwrap();
        assert_eq!(superhedge_audit(&abs, &flat).1, int(0));
        for spike in [int::<Rational>(1), int(-1)] {
            let path = DiscretePath::new(
                vec![int::<Rational>(0), int(1), int(2)],
                vec![int::<Rational>(0), spike, int(0)],
            )
            .unwrap();
            assert_eq!(superhedge_audit(&abs, &path).1, int(0));
        }
    }

    #[test]
    fn superhedge_slack_is_never_negative_on_random_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..250 {
            let phi = random_phi(&mut rng);
            let path = random_path(&mut rng);
            let horizon = path.horizon();
            let (plan, slack) = superhedge_audit(&phi, &path);
            assert!(slack >= Rational::zero(), "negative slack {slack}");
            // Integrand increments obey the slope bound.
            let cap = phi.max_abs_slope();
            for (k, pair) in plan.integrand.windows(2).enumerate() {
                let dt = path.times()[k + 1].clone() - path.times()[k].clone();
                assert!(
                    (pair[1].clone() - pair[0].clone()).abs()
                        <= cap.clone() * dt / horizon.clone()
                );
            }
        }
    }

    fn random_phi(rng: &mut ChaCha8Rng) -> PiecewisePhi<Rational> {
        let mut kinks: Vec<Rational> = (0..rng.gen_range(1..=3usize))
            .map(|_| ratio(rng.gen_range(-8..=8), 2))
            .collect();
        kinks.sort_by(|a, b| a.total_cmp(b));
        kinks.dedup();
        let mut slope = ratio::<Rational>(rng.gen_range(-6..=0), 2);
        let slope_left = slope.clone();
        let mut points = Vec::new();
        let mut value = ratio::<Rational>(rng.gen_range(-4..=4), 2);
        let mut prev: Option<Rational> = None;
        for k in &kinks {
            if let Some(p) = prev {
                value += slope.clone() * (k.clone() - p);
            }
            points.push((k.clone(), value.clone()));
            slope += ratio::<Rational>(rng.gen_range(0..=4), 2);
            prev = Some(k.clone());
        }
        PiecewisePhi::from_breakpoints(points, slope_left, slope).unwrap()
    }

    fn random_path(rng: &mut ChaCha8Rng) -> DiscretePath<Rational> {
        let steps = rng.gen_range(2..=6usize);
        let mut times = vec![int::<Rational>(0)];
        for _ in 0..steps {
            let last = times.last().unwrap().clone();
            times.push(last + ratio::<Rational>(rng.gen_range(1..=4), 2));
        }
        let values = (0..=steps)
            .map(|_| ratio(rng.gen_range(-10..=10), 2))
            .collect();
        DiscretePath::new(times, values).unwrap()
    }

    #[test]
    fn bridge_gap_vanishes_without_a_jump() {
        let nu = two_point();
        let identity = Coupling::from_points(
            nu.iter().map(|(x, w)| (x.clone(), x.clone(), w.clone())).collect(),
        );
        let bridge = approx_jump_model(&identity, int::<Rational>(1), int(2), 4).unwrap();
        assert!(bridge.l1_gap.is_zero());
    }

    #[test]
    fn bridge_gap_halves_as_the_bridge_sharpens() {
        let jump = Coupling::from_points(vec![
            (int::<Rational>(1), int(0), ratio(1, 2)),
            (int(1), int(2), ratio(1, 2)),
        ]);
        let phi = PiecewisePhi::abs_dev(int::<Rational>(1));
        let target = jump.cost(|x, y| {
            ((x.clone() + y.clone()) / int::<Rational>(2) - int::<Rational>(1)).abs()
        });
        let mut last_gap: Option<Rational> = None;
        for n in [4u32, 8, 16, 32] {
            let bridge = approx_jump_model(&jump, int::<Rational>(1), int(2), n).unwrap();
            // The median split moves half the mass each way from the
            // start value 1, so the gap saturates its bound exactly.
            assert_eq!(bridge.l1_gap, ratio(1, 2 * i64::from(n)));
            assert_eq!(bridge.l1_gap, bridge.gap_bound);
            if let Some(prev) = last_gap {
                assert_eq!(bridge.l1_gap.clone() * int::<Rational>(2), prev);
            }
            last_gap = Some(bridge.l1_gap.clone());
            // Lipschitz payoff: model price converges at the gap rate.
            let diff = bridge.expected_payoff(&phi) - target.clone();
            assert!(diff.abs() <= bridge.l1_gap);
            assert_eq!(bridge.target_payoff(&phi), target);
            // The bridge triples stay martingales.
            let model = ThreeStepModel {
                times: (int::<Rational>(0), int(1), int(2)),
                paths: bridge.paths.clone(),
            };
            assert!(model.martingale_defect().is_zero());
        }
    }

    #[test]
    fn bridge_rejects_a_too_coarse_grid() {
        let jump = Coupling::from_points(vec![
            (int::<Rational>(1), int(0), ratio(1, 2)),
            (int(1), int(2), ratio(1, 2)),
        ]);
        assert!(matches!(
            approx_jump_model(&jump, int::<Rational>(1), int(2), 1),
            Err(AsianError::BridgeTooCoarse { .. })
        ));
    }

    #[test]
    fn counterexample_prices_are_exact() {
        let report = constancy_counterexample::<Rational>();
        assert_eq!(report.model_price, ratio(41, 28));
        assert_eq!(report.constancy_price, ratio(3, 2));
        assert_eq!(report.normalized_model_price, ratio(41, 56));
        assert_eq!(report.normalized_constancy_price, ratio(3, 4));
        assert!(report.undercuts);
        assert!(!report.y_has_first_marginal);
        assert!(report.z_has_second_marginal);
        assert!(report.martingale_defect.is_zero());
        // Conditional mean of Z on the row Y = 1/4.
        let quarter = ratio::<Rational>(1, 4);
        let (mut mass, mut moment) = (Rational::zero(), Rational::zero());
        for (y, z, m) in report.joint.iter() {
            if *y == quarter {
                mass += m.clone();
                moment += z.clone() * m.clone();
            }
        }
        assert_eq!(moment / mass, quarter);
    }

    #[test]
    fn two_marginal_candidates_on_the_counterexample_marginals() {
        let m = counterexample_marginal::<Rational>();
        let bounds =
            two_marginal_candidate_bounds(&m, &m, int::<Rational>(1), int(2), &abs_phi()).unwrap();
        // Equal marginals force the identity coupling.
        assert_eq!(bounds.max_candidate, ratio(3, 2));
        assert_eq!(bounds.min_note.heuristic, ratio(3, 4));
        assert_eq!(bounds.min_note.floor, int(0));
        // The heuristic lower candidate is genuinely beaten.
        let report = constancy_counterexample::<Rational>();
        assert!(report.normalized_model_price < bounds.min_note.heuristic);
    }

    #[test]
    fn sampled_three_step_models_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let (mu, nu) = random_convex_pair::<Rational, _>(&mut rng, 5, 2);
            let model = sample_three_step(&mu, &nu, &mut rng).unwrap();
            assert_eq!(model.mass(), int(1));
            assert!(model.martingale_defect().is_zero());
            let mid = model.marginal(1);
            assert_eq!(mid.atoms(), mu.atoms());
            assert_eq!(mid.weights(), mu.weights());
            let last = model.marginal(2);
            assert_eq!(last.atoms(), nu.atoms());
            assert_eq!(last.weights(), nu.weights());
            let root = model.marginal(0);
            assert_eq!(root.mean(), mu.mean());
            assert!(convex_order(&root, &mu, &Rational::zero()).is_ok());
        }
    }

    #[test]
    fn harness_is_tight_on_the_forced_coupling() {
        let mu = DiscreteMeasure::dirac(int::<Rational>(1));
        let nu = two_point();
        let phi = PiecewisePhi::call(int::<Rational>(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = conjecture_harness(&mu, &nu, &phi, 8, &mut rng, &Rational::zero()).unwrap();
        assert_eq!(report.reference_value, ratio(1, 2));
        assert_eq!(report.min_slack, int(0));
        assert!(report.violations.is_empty());
    }

    #[test]
    fn call_payoffs_never_violate_domination() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..6 {
            let (mu, nu) = random_convex_pair::<Rational, _>(&mut rng, 4, 2);
            let strike = ratio::<Rational>(rng.gen_range(-4..=4), 2);
            let phi = PiecewisePhi::call(strike);
            let report =
                conjecture_harness(&mu, &nu, &phi, 15, &mut rng, &Rational::zero()).unwrap();
            assert!(report.violations.is_empty());
            assert!(report.min_slack >= Rational::zero());
        }
    }
}
