//! Discrete martingale transport between two or more time steps.
//!
//! A coupling of `mu` and `nu` is a joint law on atom pairs whose first
//! marginal is `mu`, whose second is `nu`, and whose conditional mean given
//! the first coordinate equals that coordinate (the martingale property).
//! Such couplings exist exactly when `mu` precedes `nu` in the convex
//! order, and extremal costs over them are linear programs. Every solve
//! returns both an optimal coupling and a dual certificate: a static
//! position in the two marginals plus a self-financing trade whose payoff
//! dominates (or is dominated by) the cost everywhere, pinning the price
//! from the other side.
//!
//! [`solve_path`] generalizes to several steps with any subset of the
//! marginals constrained; the martingale condition is imposed prefix by
//! prefix.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::lp::{Direction, LinearProgram, LpError, RowOp};
use crate::measure::{convex_order, ConvexOrderViolation, DiscreteMeasure};
use crate::scalar::{eq_tol, Scalar};

/// Hard cap on LP variables in path problems.
pub const PATH_VAR_CAP: usize = 200_000;

/// Failure of a transport solve.
#[derive(Clone, Debug)]
pub enum MotError<S> {
    /// Marginals not in convex order, so no martingale coupling exists.
    ConvexOrder(ConvexOrderViolation<S>),
    /// The underlying linear program failed.
    Lp(LpError<S>),
    /// Product of supports exceeds [`PATH_VAR_CAP`].
    TooLarge {
        /// Requested variable count.
        size: usize,
    },
    /// Inconsistent problem data (mismatched supports or marginals).
    BadSpec(&'static str),
}

impl<S: fmt::Display> fmt::Display for MotError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotError::ConvexOrder(v) => write!(f, "marginals not in convex order: {v}"),
            MotError::Lp(e) => write!(f, "linear program failed: {e}"),
            MotError::TooLarge { size } => {
                write!(f, "path space of {size} variables exceeds cap {PATH_VAR_CAP}")
            }
            MotError::BadSpec(what) => write!(f, "bad problem data: {what}"),
        }
    }
}

impl<S> From<LpError<S>> for MotError<S> {
    fn from(e: LpError<S>) -> Self {
        MotError::Lp(e)
    }
}

/// A discrete coupling: mass on pairs of marginal atoms.
#[derive(Clone, Debug)]
pub struct Coupling<S> {
    x_atoms: Vec<S>,
    y_atoms: Vec<S>,
    /// `(i, j, mass)` with positive mass, sorted by `(i, j)`.
    entries: Vec<(u32, u32, S)>,
}

impl<S: Scalar> Coupling<S> {
    /// Build from raw parts, dropping zero masses.
    pub fn new(x_atoms: Vec<S>, y_atoms: Vec<S>, mut entries: Vec<(u32, u32, S)>) -> Self {
        entries.retain(|(_, _, w)| !w.is_zero());
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Coupling {
            x_atoms,
            y_atoms,
            entries,
        }
    }

    /// Build from `(x, y, mass)` triples; atom lists are the distinct
    /// values, masses on repeated pairs are summed.
    pub fn from_points(points: Vec<(S, S, S)>) -> Self {
        let mut xs: Vec<S> = points.iter().map(|(x, _, _)| x.clone()).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        let mut ys: Vec<S> = points.iter().map(|(_, y, _)| y.clone()).collect();
        ys.sort_by(|a, b| a.total_cmp(b));
        ys.dedup();
        let mut entries: Vec<(u32, u32, S)> = points
            .into_iter()
            .map(|(x, y, w)| {
                let i = xs.iter().position(|a| *a == x).unwrap() as u32;
                let j = ys.iter().position(|a| *a == y).unwrap() as u32;
                (i, j, w)
            })
            .collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        entries.dedup_by(|b, a| {
            if a.0 == b.0 && a.1 == b.1 {
                a.2 = a.2.clone() + b.2.clone();
                true
            } else {
                false
            }
        });
        Coupling::new(xs, ys, entries)
    }

    /// First-coordinate atoms.
    pub fn x_atoms(&self) -> &[S] {
        &self.x_atoms
    }

    /// Second-coordinate atoms.
    pub fn y_atoms(&self) -> &[S] {
        &self.y_atoms
    }

    /// Positive-mass entries `(i, j, mass)`.
    pub fn entries(&self) -> &[(u32, u32, S)] {
        &self.entries
    }

    /// Iterate `(x, y, mass)` by value.
    pub fn iter(&self) -> impl Iterator<Item = (&S, &S, &S)> + '_ {
        self.entries
            .iter()
            .map(|(i, j, w)| (&self.x_atoms[*i as usize], &self.y_atoms[*j as usize], w))
    }

    /// Total mass.
    pub fn mass(&self) -> S {
        self.entries
            .iter()
            .fold(S::zero(), |acc, (_, _, w)| acc + w.clone())
    }

    /// Integral of a cost against the coupling.
    pub fn cost<F: Fn(&S, &S) -> S>(&self, cost: F) -> S {
        self.iter()
            .fold(S::zero(), |acc, (x, y, w)| acc + cost(x, y) * w.clone())
    }

    /// Mass per first-coordinate atom.
    pub fn x_weights(&self) -> Vec<S> {
        let mut w = vec![S::zero(); self.x_atoms.len()];
        for (i, _, m) in &self.entries {
            w[*i as usize] = w[*i as usize].clone() + m.clone();
        }
        w
    }

    /// Mass per second-coordinate atom.
    pub fn y_weights(&self) -> Vec<S> {
        let mut w = vec![S::zero(); self.y_atoms.len()];
        for (_, j, m) in &self.entries {
            w[*j as usize] = w[*j as usize].clone() + m.clone();
        }
        w
    }

    /// Largest barycenter defect `|sum_j (y_j - x_i) pi_ij|` over rows.
    pub fn martingale_defect(&self) -> S {
        let mut defect = vec![S::zero(); self.x_atoms.len()];
        for (i, j, w) in &self.entries {
            let i = *i as usize;
            let d = self.y_atoms[*j as usize].clone() - self.x_atoms[i].clone();
            defect[i] = defect[i].clone() + d * w.clone();
        }
        defect
            .into_iter()
            .fold(S::zero(), |acc, d| if d.abs() > acc { d.abs() } else { acc })
    }

    /// Second marginal as a measure (merges coincident atoms).
    pub fn y_marginal(&self) -> Result<DiscreteMeasure<S>, crate::measure::MeasureError<S>> {
        let w = self.y_weights();
        DiscreteMeasure::new(
            self.y_atoms
                .iter()
                .cloned()
                .zip(w)
                .filter(|(_, w)| !w.is_zero())
                .collect(),
        )
    }
}

/// Dual certificate of a two-step solve: static payoffs `phi` on the first
/// marginal and `psi` on the second plus a delta position `h` entered at
/// the first step. For an upper bound the combined payoff dominates the
/// cost pointwise on the product of supports; for a lower bound it is
/// dominated.
#[derive(Clone, Debug)]
pub struct HedgeCertificate<S> {
    /// Direction it certifies.
    pub direction: Direction,
    /// Payoff per first-marginal atom.
    pub phi: Vec<S>,
    /// Payoff per second-marginal atom.
    pub psi: Vec<S>,
    /// Shares of the underlying bought at the first step, per atom.
    pub h: Vec<S>,
}

impl<S: Scalar> HedgeCertificate<S> {
    /// Price of the static legs: `int phi dmu + int psi dnu`.
    pub fn price(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> S {
        let a = mu
            .weights()
            .iter()
            .zip(self.phi.iter())
            .fold(S::zero(), |acc, (w, p)| acc + w.clone() * p.clone());
        nu.weights()
            .iter()
            .zip(self.psi.iter())
            .fold(a, |acc, (w, p)| acc + w.clone() * p.clone())
    }

    /// Worst pointwise violation of the domination inequality over the
    /// product of supports; zero (or tolerance-level) when valid.
    pub fn domination_gap<F: Fn(&S, &S) -> S>(
        &self,
        mu: &DiscreteMeasure<S>,
        nu: &DiscreteMeasure<S>,
        cost: F,
    ) -> S {
        let mut worst = S::zero();
        for (i, x) in mu.atoms().iter().enumerate() {
            for (j, y) in nu.atoms().iter().enumerate() {
                let hedge = self.phi[i].clone()
                    + self.psi[j].clone()
                    + self.h[i].clone() * (y.clone() - x.clone());
                let c = cost(x, y);
                // Maximize: hedge >= cost must hold; Minimize: hedge <= cost.
                let gap = match self.direction {
                    Direction::Maximize => c - hedge,
                    Direction::Minimize => hedge - c,
                };
                if gap > worst {
                    worst = gap;
                }
            }
        }
        worst
    }
}

/// Result of a two-step solve.
#[derive(Clone, Debug)]
pub struct TwoStepSolution<S> {
    /// Extremal expected cost.
    pub value: S,
    /// An optimal coupling attaining it.
    pub coupling: Coupling<S>,
    /// Dual certificate pinning the value from the other side.
    pub certificate: HedgeCertificate<S>,
    /// Simplex pivots spent.
    pub iterations: usize,
}

fn two_step_lp<S: Scalar, F: Fn(&S, &S) -> S>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    cost: &F,
    direction: Direction,
) -> LinearProgram<S> {
    let nx = mu.len();
    let ny = nu.len();
    let mut lp = LinearProgram::new(direction);
    // Row layout: x-marginal rows, y-marginal rows, barycenter rows.
    for w in mu.weights() {
        lp.add_row(RowOp::Eq, w.clone());
    }
    for w in nu.weights() {
        lp.add_row(RowOp::Eq, w.clone());
    }
    for _ in 0..nx {
        lp.add_row(RowOp::Eq, S::zero());
    }
    for (i, x) in mu.atoms().iter().enumerate() {
        for (j, y) in nu.atoms().iter().enumerate() {
            lp.add_column(
                cost(x, y),
                vec![
                    (i, S::one()),
                    (nx + j, S::one()),
                    (nx + ny + i, y.clone() - x.clone()),
                ],
            );
        }
    }
    lp
}

fn coupling_from_x<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    x: &[S],
) -> Coupling<S> {
    let ny = nu.len();
    // Basic-at-zero variables of a degenerate vertex carry numeric dust;
    // masses below atom resolution are noise, not support.
    let floor = S::atom_merge_tol();
    let entries = x
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > floor)
        .map(|(v, w)| ((v / ny) as u32, (v % ny) as u32, w.clone()))
        .collect();
    Coupling::new(mu.atoms().to_vec(), nu.atoms().to_vec(), entries)
}

fn certificate_from_duals<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    duals: &[S],
    direction: Direction,
) -> HedgeCertificate<S> {
    let nx = mu.len();
    let ny = nu.len();
    HedgeCertificate {
        direction,
        phi: duals[..nx].to_vec(),
        psi: duals[nx..nx + ny].to_vec(),
        h: duals[nx + ny..nx + ny + nx].to_vec(),
    }
}

/// Extremize the expected cost over martingale couplings of `mu` and `nu`.
pub fn solve_two_step<S: Scalar, F: Fn(&S, &S) -> S>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    cost: F,
    direction: Direction,
) -> Result<TwoStepSolution<S>, MotError<S>> {
    convex_order(mu, nu, &S::default_tol()).map_err(MotError::ConvexOrder)?;
    let lp = two_step_lp(mu, nu, &cost, direction);
    let sol = lp.solve()?;
    Ok(TwoStepSolution {
        value: sol.objective.clone(),
        coupling: coupling_from_x(mu, nu, &sol.x),
        certificate: certificate_from_duals(mu, nu, &sol.duals, direction),
        iterations: sol.iterations,
    })
}

/// Like [`solve_two_step`], then re-extremize `tiebreak` (in the opposite
/// direction) over the optimal face. Returns the primary solution and the
/// refined coupling with its secondary value.
pub fn solve_two_step_refined<S: Scalar, F, G>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    cost: F,
    direction: Direction,
    tiebreak: G,
) -> Result<(TwoStepSolution<S>, Coupling<S>, S), MotError<S>>
where
    F: Fn(&S, &S) -> S,
    G: Fn(&S, &S) -> S,
{
    convex_order(mu, nu, &S::default_tol()).map_err(MotError::ConvexOrder)?;
    let lp = two_step_lp(mu, nu, &cost, direction);
    let tb = &tiebreak;
    let secondary: Vec<S> = mu
        .atoms()
        .iter()
        .flat_map(|x| nu.atoms().iter().map(move |y| tb(x, y)))
        .collect();
    let lex = lp.solve_lexicographic(secondary, direction.flip())?;
    let primary = TwoStepSolution {
        value: lex.primary.objective.clone(),
        coupling: coupling_from_x(mu, nu, &lex.primary.x),
        certificate: certificate_from_duals(mu, nu, &lex.primary.duals, direction),
        iterations: lex.primary.iterations,
    };
    let refined = coupling_from_x(mu, nu, &lex.refined.x);
    Ok((primary, refined, lex.refined.objective.clone()))
}

/// Multi-step problem: one support per step, optionally a marginal pinned
/// to that support.
#[derive(Clone, Debug)]
pub struct PathSpec<S> {
    /// Support grid per step.
    pub supports: Vec<Vec<S>>,
    /// Marginal constraint per step; `Some` entries must list weights
    /// aligned with the support.
    pub marginals: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> PathSpec<S> {
    /// Spec with every step's marginal pinned.
    pub fn fully_constrained(measures: &[DiscreteMeasure<S>]) -> Self {
        PathSpec {
            supports: measures.iter().map(|m| m.atoms().to_vec()).collect(),
            marginals: measures.iter().map(|m| Some(m.weights().to_vec())).collect(),
        }
    }

    fn validate(&self) -> Result<usize, MotError<S>> {
        if self.supports.is_empty() {
            return Err(MotError::BadSpec("no steps"));
        }
        if self.supports.len() != self.marginals.len() {
            return Err(MotError::BadSpec("support/marginal length mismatch"));
        }
        let mut vars = 1usize;
        for (k, sup) in self.supports.iter().enumerate() {
            if sup.is_empty() {
                return Err(MotError::BadSpec("empty support"));
            }
            if let Some(w) = &self.marginals[k] {
                if w.len() != sup.len() {
                    return Err(MotError::BadSpec("marginal width mismatch"));
                }
            }
            vars = vars.saturating_mul(sup.len());
            if vars > PATH_VAR_CAP {
                return Err(MotError::TooLarge { size: vars });
            }
        }
        Ok(vars)
    }
}

/// A path-space solution: value plus the supported paths.
#[derive(Clone, Debug)]
pub struct PathSolution<S> {
    /// Extremal expected payoff.
    pub value: S,
    /// `(path, mass)` with positive mass.
    pub paths: Vec<(Vec<S>, S)>,
    /// Simplex pivots spent.
    pub iterations: usize,
}

/// Extremize `E[payoff(X_1..X_T)]` over laws on the product of supports
/// that are martingales (prefix-conditional means match) and meet every
/// pinned marginal. Total mass is constrained to one.
pub fn solve_path<S: Scalar, F: Fn(&[S]) -> S>(
    spec: &PathSpec<S>,
    payoff: F,
    direction: Direction,
) -> Result<PathSolution<S>, MotError<S>> {
    let n_vars = spec.validate()?;
    let steps = spec.supports.len();
    let sizes: Vec<usize> = spec.supports.iter().map(|s| s.len()).collect();

    let mut lp = LinearProgram::new(direction);
    lp.add_row(RowOp::Eq, S::one());

    // Marginal rows per pinned step.
    let mut marginal_row: Vec<Option<usize>> = vec![None; steps];
    for k in 0..steps {
        if let Some(w) = &spec.marginals[k] {
            let first = lp.n_rows();
            for wi in w {
                lp.add_row(RowOp::Eq, wi.clone());
            }
            marginal_row[k] = Some(first);
        }
    }

    // Martingale rows: one per proper prefix, mixed-radix indexed.
    let mut prefix_row: Vec<usize> = Vec::with_capacity(steps);
    let mut prefix_count: Vec<usize> = Vec::with_capacity(steps);
    let mut count = 1usize;
    for k in 0..steps.saturating_sub(1) {
        count *= sizes[k];
        let first = lp.n_rows();
        for _ in 0..count {
            lp.add_row(RowOp::Eq, S::zero());
        }
        prefix_row.push(first);
        prefix_count.push(count);
    }

    let mut idx = vec![0usize; steps];
    let mut path: Vec<S> = idx.iter().map(|_| S::zero()).collect();
    for v in 0..n_vars {
        // Decode the tuple (row-major: last step fastest).
        let mut rem = v;
        for k in (0..steps).rev() {
            idx[k] = rem % sizes[k];
            rem /= sizes[k];
        }
        for k in 0..steps {
            path[k] = spec.supports[k][idx[k]].clone();
        }
        let mut entries: Vec<(usize, S)> = Vec::with_capacity(1 + steps);
        entries.push((0, S::one()));
        for k in 0..steps {
            if let Some(first) = marginal_row[k] {
                entries.push((first + idx[k], S::one()));
            }
        }
        let mut pid = 0usize;
        for k in 0..steps - 1 {
            pid = pid * sizes[k] + idx[k];
            debug_assert!(pid < prefix_count[k]);
            let coeff = path[k + 1].clone() - path[k].clone();
            if !coeff.is_zero() {
                entries.push((prefix_row[k] + pid, coeff));
            }
        }
        lp.add_column(payoff(&path), entries);
    }

    let sol = lp.solve()?;
    let mut paths = Vec::new();
    for (v, w) in sol.x.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let mut rem = v;
        let mut tuple = vec![S::zero(); steps];
        for k in (0..steps).rev() {
            tuple[k] = spec.supports[k][rem % sizes[k]].clone();
            rem /= sizes[k];
        }
        paths.push((tuple, w.clone()));
    }
    Ok(PathSolution {
        value: sol.objective,
        paths,
        iterations: sol.iterations,
    })
}

/// Every vertex of the martingale coupling polytope of `(mu, nu)`. The
/// polytope does not depend on any cost, and extremal costs are attained
/// at vertices, so scanning these is a brute-force second route for
/// cross-checking [`solve_two_step`] on small instances.
pub fn enumerate_couplings<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<Vec<Coupling<S>>, MotError<S>> {
    convex_order(mu, nu, &S::default_tol()).map_err(MotError::ConvexOrder)?;
    let lp = two_step_lp(mu, nu, &|_, _| S::zero(), Direction::Maximize);
    let vertices = crate::lp::enumerate_vertices(&lp)?;
    Ok(vertices
        .iter()
        .map(|v| coupling_from_x(mu, nu, v))
        .collect())
}

/// A uniformly perturbed extreme point of the martingale couplings of
/// `mu` and `nu`: optimize a random cost table, returning the optimal
/// basic solution. Marginals and barycenters hold exactly in exact
/// arithmetic.
pub fn random_vertex_coupling<S: Scalar, R: Rng>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    rng: &mut R,
) -> Result<Coupling<S>, MotError<S>> {
    convex_order(mu, nu, &S::default_tol()).map_err(MotError::ConvexOrder)?;
    let table: Vec<Vec<S>> = (0..mu.len())
        .map(|_| {
            (0..nu.len())
                .map(|_| S::from_ratio(rng.gen_range(-1_000_000..=1_000_000), 1_000_000))
                .collect()
        })
        .collect();
    let lp = two_step_lp(mu, nu, &|x, y| {
        let i = mu.atoms().iter().position(|a| a == x).unwrap();
        let j = nu.atoms().iter().position(|a| a == y).unwrap();
        table[i][j].clone()
    }, Direction::Maximize);
    let sol = lp.solve()?;
    Ok(coupling_from_x(mu, nu, &sol.x))
}

/// Random atomic probability measure: up to `atoms` distinct positions on
/// the centered grid `radius * k / 1000`, `k` integer, with positive
/// weights normalized exactly.
pub fn random_measure<S: Scalar, R: Rng>(
    rng: &mut R,
    atoms: usize,
    radius: i64,
) -> DiscreteMeasure<S> {
    let atoms = atoms.max(1);
    let mut ks: Vec<i64> = (0..atoms).map(|_| rng.gen_range(-1000..=1000)).collect();
    ks.sort_unstable();
    ks.dedup();
    let pairs = ks
        .into_iter()
        .map(|k| {
            (
                S::from_ratio(radius * k, 1000),
                S::from_i64(rng.gen_range(1..=1000)),
            )
        })
        .collect();
    DiscreteMeasure::normalized(pairs).expect("positive weights on a nonempty grid")
}

/// Random marginal pair `(mu, nu)` in convex order: `nu` is random and
/// `mu` collapses random consecutive blocks of `nu` to their barycenters,
/// so `mu` is the law of a conditional expectation of `nu` and a
/// martingale coupling exists by construction.
pub fn random_convex_pair<S: Scalar, R: Rng>(
    rng: &mut R,
    nu_atoms: usize,
    radius: i64,
) -> (DiscreteMeasure<S>, DiscreteMeasure<S>) {
    let nu = random_measure(rng, nu_atoms, radius);
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < nu.len() {
        let block = rng.gen_range(1..=3usize).min(nu.len() - i);
        let mass = nu.weights()[i..i + block]
            .iter()
            .fold(S::zero(), |acc, w: &S| acc + w.clone());
        let moment = nu.atoms()[i..i + block]
            .iter()
            .zip(&nu.weights()[i..i + block])
            .fold(S::zero(), |acc, (x, w): (&S, &S)| acc + x.clone() * w.clone());
        pairs.push((moment / mass.clone(), mass));
        i += block;
    }
    let mu = DiscreteMeasure::new(pairs).expect("block masses sum to one");
    (mu, nu)
}

/// Check that a coupling matches the given marginals and the martingale
/// property within `tol`.
pub fn verify_coupling<S: Scalar>(
    coupling: &Coupling<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: &S,
) -> bool {
    if coupling.x_atoms() != mu.atoms() || coupling.y_atoms() != nu.atoms() {
        return false;
    }
    let xw = coupling.x_weights();
    let yw = coupling.y_weights();
    mu.weights()
        .iter()
        .zip(xw.iter())
        .all(|(a, b)| eq_tol(a, b, tol))
        && nu
            .weights()
            .iter()
            .zip(yw.iter())
            .all(|(a, b)| eq_tol(a, b, tol))
        && coupling.martingale_defect() <= *tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::enumerate_vertices;
    use crate::scalar::{int, ratio, Rational};
    use num_traits::{Signed, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn abs_sum<S: Scalar>(x: &S, y: &S) -> S {
        (x.clone() + y.clone()).abs()
    }

    fn dirac_to_pair() -> (DiscreteMeasure<Rational>, DiscreteMeasure<Rational>) {
        let mu = DiscreteMeasure::dirac(int(0));
        let nu = DiscreteMeasure::new(vec![
            (ratio(-1, 2), ratio(1, 2)),
            (ratio(1, 2), ratio(1, 2)),
        ])
        .unwrap();
        (mu, nu)
    }

    #[test]
    fn forced_coupling_prices_exactly() {
        // One source atom: the coupling is forced and min = max.
        let (mu, nu) = dirac_to_pair();
        let lo = solve_two_step(&mu, &nu, abs_sum, Direction::Minimize).unwrap();
        let hi = solve_two_step(&mu, &nu, abs_sum, Direction::Maximize).unwrap();
        assert_eq!(lo.value, ratio(1, 2));
        assert_eq!(hi.value, ratio(1, 2));
        assert!(verify_coupling(&lo.coupling, &mu, &nu, &Rational::zero()));
    }

    #[test]
    fn certificates_dominate_pointwise() {
        let mu = DiscreteMeasure::new(vec![
            (int(-1), ratio(1, 2)),
            (int(1), ratio(1, 2)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        for dir in [Direction::Minimize, Direction::Maximize] {
            let sol = solve_two_step(&mu, &nu, abs_sum, dir).unwrap();
            let cert = &sol.certificate;
            assert_eq!(cert.price(&mu, &nu), sol.value, "strong duality");
            assert_eq!(cert.domination_gap(&mu, &nu, abs_sum), Rational::zero());
            assert!(verify_coupling(&sol.coupling, &mu, &nu, &Rational::zero()));
        }
    }

    #[test]
    fn solver_agrees_with_vertex_enumeration() {
        let mu = DiscreteMeasure::new(vec![
            (int::<Rational>(-1), ratio(2, 3)),
            (int(2), ratio(1, 3)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::new(vec![
            (int(-3), ratio(1, 4)),
            (int(-1), ratio(1, 4)),
            (int(1), ratio(1, 4)),
            (int(3), ratio(1, 4)),
        ])
        .unwrap();
        let lp = two_step_lp(&mu, &nu, &abs_sum, Direction::Maximize);
        let vertices = enumerate_vertices(&lp).unwrap();
        assert!(!vertices.is_empty());
        let best = vertices
            .iter()
            .map(|v| lp.objective_value(v))
            .max()
            .unwrap();
        let sol = solve_two_step(&mu, &nu, abs_sum, Direction::Maximize).unwrap();
        assert_eq!(sol.value, best);
        let worst = vertices
            .iter()
            .map(|v| lp.objective_value(v))
            .min()
            .unwrap();
        let lo = solve_two_step(&mu, &nu, abs_sum, Direction::Minimize).unwrap();
        assert_eq!(lo.value, worst);
        assert!(lo.value < sol.value);

        // The public coupling enumeration sees the same extrema, and
        // every listed vertex is a genuine coupling.
        let all = enumerate_couplings(&mu, &nu).unwrap();
        assert_eq!(all.len(), vertices.len());
        for c in &all {
            assert!(verify_coupling(c, &mu, &nu, &Rational::zero()));
        }
        let best_cost = all.iter().map(|c| c.cost(abs_sum)).max().unwrap();
        let worst_cost = all.iter().map(|c| c.cost(abs_sum)).min().unwrap();
        assert_eq!(best_cost, sol.value);
        assert_eq!(worst_cost, lo.value);
    }

    #[test]
    fn rejects_marginals_out_of_order() {
        let mu = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 2)),
            (int(2), ratio(1, 2)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::<Rational>::dirac(int(0));
        let err = solve_two_step(&mu, &nu, abs_sum, Direction::Minimize).unwrap_err();
        assert!(matches!(err, MotError::ConvexOrder(_)));
    }

    #[test]
    fn path_solver_matches_two_step() {
        let mu = DiscreteMeasure::new(vec![
            (int::<Rational>(-1), ratio(1, 2)),
            (int(1), ratio(1, 2)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        let spec = PathSpec::fully_constrained(&[mu.clone(), nu.clone()]);
        for dir in [Direction::Minimize, Direction::Maximize] {
            let via_path = solve_path(&spec, |p| abs_sum(&p[0], &p[1]), dir).unwrap();
            let direct = solve_two_step(&mu, &nu, abs_sum, dir).unwrap();
            assert_eq!(via_path.value, direct.value);
        }
    }

    #[test]
    fn refined_solve_stays_on_optimal_face() {
        let mu = DiscreteMeasure::new(vec![
            (int(-1), ratio(1, 2)),
            (int(1), ratio(1, 2)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        let square_weight = |x: &Rational, y: &Rational| abs_sum(x, y) * y.clone() * y.clone();
        let (primary, refined, refined_value) =
            solve_two_step_refined(&mu, &nu, abs_sum, Direction::Minimize, square_weight)
                .unwrap();
        let refined_primary_cost = refined.cost(abs_sum);
        assert_eq!(refined_primary_cost, primary.value, "still optimal");
        assert_eq!(refined.cost(square_weight), refined_value);
        assert!(verify_coupling(&refined, &mu, &nu, &Rational::zero()));
    }

    #[test]
    fn random_vertices_are_couplings() {
        let mu = DiscreteMeasure::new(vec![
            (int(-1), ratio(1, 2)),
            (int(1), ratio(1, 2)),
        ])
        .unwrap();
        let nu = DiscreteMeasure::new(vec![
            (int(-2), ratio(1, 4)),
            (int(0), ratio(1, 2)),
            (int(2), ratio(1, 4)),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let c = random_vertex_coupling(&mu, &nu, &mut rng).unwrap();
            assert!(verify_coupling(&c, &mu, &nu, &Rational::zero()));
        }
    }

    #[test]
    fn random_pairs_are_in_convex_order_and_solvable() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (mu, nu) = random_convex_pair::<Rational, _>(&mut rng, 6, 2);
            assert!(crate::measure::convex_order(&mu, &nu, &Rational::zero()).is_ok());
            assert_eq!(mu.mean(), nu.mean());
            let sol = solve_two_step(&mu, &nu, abs_sum, Direction::Maximize).unwrap();
            assert!(verify_coupling(&sol.coupling, &mu, &nu, &Rational::zero()));
        }
    }

    #[test]
    fn unconstrained_middle_step_reaches_jensen_extremes() {
        // Only the last marginal pinned: max of a convex payoff of the
        // middle step is the terminal expectation, min is the value at
        // the mean.
        let nu = DiscreteMeasure::new(vec![
            (int::<Rational>(0), ratio(1, 2)),
            (int(2), ratio(1, 2)),
        ])
        .unwrap();
        let mut support = nu.atoms().to_vec();
        support.push(nu.mean());
        support.sort_by(|a, b| a.total_cmp(b));
        support.dedup();
        let spec = PathSpec {
            supports: vec![support.clone(), support, nu.atoms().to_vec()],
            marginals: vec![None, None, Some(nu.weights().to_vec())],
        };
        let payoff = |p: &[Rational]| (p[1].clone() - int::<Rational>(1)).abs();
        let hi = solve_path(&spec, payoff, Direction::Maximize).unwrap();
        let lo = solve_path(&spec, payoff, Direction::Minimize).unwrap();
        assert_eq!(hi.value, int(1)); // E |Y - 1| with Y ~ nu
        assert_eq!(lo.value, int(0)); // payoff at the mean
    }
}
