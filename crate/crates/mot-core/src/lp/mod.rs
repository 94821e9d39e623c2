//! Self-contained linear-programming kernel.
//!
//! Revised simplex over column-sparse constraint matrices with an explicit
//! dense basis inverse, two phases, and deterministic pivoting: largest
//! reduced cost with lowest-index tie-breaks by default, switching to
//! Bland's rule during long degenerate runs so cycling is impossible. The
//! same code runs on `f64` (feasibility/optimality tolerance `1e-9`) and on
//! exact rationals (all tolerances zero).
//!
//! Redundant rows are tolerated: after phase one, artificials stuck on
//! dependent rows are pivoted out where possible and otherwise parked at
//! zero, where they provably never move again. This matters here because
//! martingale-transport encodings always carry dependent rows.
//!
//! [`enumerate_vertices`] is an independent brute-force route to the same
//! optima (all basic feasible solutions of small programs); solver results
//! are cross-checked against it in tests and acceptance runs.

mod simplex;
mod vertex;

pub use vertex::enumerate_vertices;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;



use crate::scalar::Scalar;

/// Optimization sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Minimize the objective.
    Minimize,
    /// Maximize the objective.
    Maximize,
}

impl Direction {
    /// The opposite sense.
    pub fn flip(self) -> Self {
        match self {
            Direction::Minimize => Direction::Maximize,
            Direction::Maximize => Direction::Minimize,
        }
    }
}

/// Row comparison operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOp {
    /// Equality row.
    Eq,
    /// `<=` row.
    Le,
    /// `>=` row.
    Ge,
}

/// A linear program over nonnegative variables:
/// optimize `c . x` subject to `A x (op) b`, `x >= 0`.
///
/// Columns are stored sparsely; rows are declared first and columns then
/// reference them.
#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    direction: Direction,
    ops: Vec<RowOp>,
    rhs: Vec<S>,
    objective: Vec<S>,
    cols: Vec<Vec<(u32, S)>>,
}

impl<S: Scalar> LinearProgram<S> {
    /// Empty program.
    pub fn new(direction: Direction) -> Self {
        LinearProgram {
            direction,
            ops: Vec::new(),
            rhs: Vec::new(),
            objective: Vec::new(),
            cols: Vec::new(),
        }
    }

    /// Declare a row; returns its index.
    pub fn add_row(&mut self, op: RowOp, rhs: S) -> usize {
        self.ops.push(op);
        self.rhs.push(rhs);
        self.ops.len() - 1
    }

    /// Declare a column with objective coefficient `obj` and the given
    /// sparse entries `(row, coeff)`; returns its index. Entries must
    /// reference declared rows; duplicates are summed.
    pub fn add_column(&mut self, obj: S, entries: Vec<(usize, S)>) -> usize {
        let mut col: Vec<(u32, S)> = Vec::with_capacity(entries.len());
        for (r, v) in entries {
            assert!(r < self.ops.len(), "column references undeclared row");
            if v.is_zero() {
                continue;
            }
            col.push((r as u32, v));
        }
        col.sort_by_key(|(r, _)| *r);
        col.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.clone() + b.1.clone();
                true
            } else {
                false
            }
        });
        col.retain(|(_, v)| !v.is_zero());
        self.objective.push(obj);
        self.cols.push(col);
        self.cols.len() - 1
    }

    /// Build from a dense row-major matrix.
    pub fn from_dense(
        direction: Direction,
        objective: Vec<S>,
        rows: Vec<(Vec<S>, RowOp, S)>,
    ) -> Self {
        let n = objective.len();
        let mut lp = LinearProgram::new(direction);
        for (coeffs, op, rhs) in &rows {
            assert_eq!(coeffs.len(), n, "row width mismatch");
            lp.add_row(*op, rhs.clone());
        }
        for (j, obj) in objective.into_iter().enumerate() {
            let entries = rows
                .iter()
                .enumerate()
                .map(|(i, (coeffs, _, _))| (i, coeffs[j].clone()))
                .collect();
            lp.add_column(obj, entries);
        }
        lp
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.ops.len()
    }

    /// Number of columns.
    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    /// Optimization sense.
    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Objective coefficients.
    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    /// Replace the objective (same length) and sense.
    pub fn set_objective(&mut self, objective: Vec<S>, direction: Direction) {
        assert_eq!(objective.len(), self.cols.len());
        self.objective = objective;
        self.direction = direction;
    }

    /// Row operators.
    pub fn ops(&self) -> &[RowOp] {
        &self.ops
    }

    /// Right-hand sides.
    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    /// Sparse entries of column `j`.
    pub fn column(&self, j: usize) -> &[(u32, S)] {
        &self.cols[j]
    }

    /// `A x` for a dense `x` (length checked).
    pub fn apply(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols.len());
        let mut out = vec![S::zero(); self.ops.len()];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j].is_zero() {
                continue;
            }
            for (r, v) in col {
                out[*r as usize] = out[*r as usize].clone() + v.clone() * x[j].clone();
            }
        }
        out
    }

    /// `c . x`.
    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective
            .iter()
            .zip(x.iter())
            .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Solve to optimality.
    pub fn solve(&self) -> Result<LpSolution<S>, LpError<S>> {
        simplex::solve(self)
    }

    /// Optimize `secondary` over the optimal face of the primary
    /// objective: solves the program, then keeps pivoting on the secondary
    /// objective with entering columns restricted to zero primary reduced
    /// cost. Such pivots leave every primary reduced cost (and hence the
    /// primary value) unchanged, so no pinning row or slack is needed.
    pub fn solve_lexicographic(
        &self,
        secondary: Vec<S>,
        secondary_direction: Direction,
    ) -> Result<LexSolution<S>, LpError<S>> {
        assert_eq!(secondary.len(), self.cols.len());
        let (primary, refined) = simplex::solve_lexicographic(self, &secondary, secondary_direction)?;
        Ok(LexSolution { primary, refined })
    }
}

/// Optimal solution of a [`LinearProgram`].
#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    /// Optimal values of the structural variables.
    pub x: Vec<S>,
    /// Optimal objective value.
    pub objective: S,
    /// Dual multipliers, one per row. For a maximization they satisfy
    /// `c_j - y . A_j <= 0` on every column and `y . b = objective`
    /// (within tolerance); for a minimization the reduced costs are `>= 0`.
    pub duals: Vec<S>,
    /// Per row: `Some(j)` when structural column `j` is basic in that row.
    pub basis: Vec<Option<usize>>,
    /// Rows found to be linear combinations of earlier rows.
    pub redundant_rows: Vec<usize>,
    /// Simplex pivots performed.
    pub iterations: usize,
}

/// Primary and refined stages of a lexicographic solve.
#[derive(Clone, Debug)]
pub struct LexSolution<S> {
    /// Solution of the primary objective.
    pub primary: LpSolution<S>,
    /// Solution optimizing the secondary objective over the primary's
    /// optimal face. Its `objective` and `duals` are priced under the
    /// secondary cost; the duals certify optimality only on that face.
    pub refined: LpSolution<S>,
}

/// Solver failure.
#[derive(Clone, Debug, PartialEq)]
pub enum LpError<S> {
    /// No feasible point; carries the residual infeasibility (minimal
    /// attainable sum of constraint violations).
    Infeasible {
        /// Phase-one residual.
        residual: S,
    },
    /// The objective is unbounded in the optimization direction.
    Unbounded,
    /// Iteration cap exceeded (defensive; deterministic pivoting with a
    /// Bland fallback should always terminate first).
    IterationLimit,
    /// Basis matrix could not be factorized (doubles only).
    SingularBasis,
    /// Instance exceeds a hard size guard.
    TooLarge {
        /// Offending size.
        size: usize,
        /// The guard.
        cap: usize,
    },
}

impl<S: fmt::Display> fmt::Display for LpError<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Infeasible { residual } => {
                write!(f, "infeasible (phase-one residual {residual})")
            }
            LpError::Unbounded => write!(f, "objective unbounded"),
            LpError::IterationLimit => write!(f, "iteration limit exceeded"),
            LpError::SingularBasis => write!(f, "singular basis factorization"),
            LpError::TooLarge { size, cap } => {
                write!(f, "instance size {size} exceeds cap {cap}")
            }
        }
    }
}

/// Largest primal violation of `sol.x` against `lp`: constraint residuals
/// and negative variables. Zero for exact optimal solutions.
pub fn primal_residual<S: Scalar>(lp: &LinearProgram<S>, x: &[S]) -> S {
    let ax = lp.apply(x);
    let mut worst = S::zero();
    for (i, v) in ax.iter().enumerate() {
        let d = v.clone() - lp.rhs[i].clone();
        let viol = match lp.ops[i] {
            RowOp::Eq => d.abs(),
            RowOp::Le => {
                if d > S::zero() {
                    d
                } else {
                    S::zero()
                }
            }
            RowOp::Ge => {
                if d < S::zero() {
                    d.abs()
                } else {
                    S::zero()
                }
            }
        };
        if viol > worst {
            worst = viol;
        }
    }
    for v in x {
        if *v < S::zero() {
            let viol = v.abs();
            if viol > worst {
                worst = viol;
            }
        }
    }
    worst
}

/// Diagnostics for an optimal primal/dual pair.
#[derive(Clone, Debug)]
pub struct DualCheck<S> {
    /// Worst reduced-cost sign violation across columns.
    pub reduced_cost_violation: S,
    /// Worst dual sign violation across inequality rows.
    pub sign_violation: S,
    /// `|y . b - objective|`.
    pub value_gap: S,
}

/// Check the dual vector of an optimal solution: reduced-cost signs, dual
/// signs on inequality rows, and strong duality `y . b = objective`.
pub fn dual_residual<S: Scalar>(lp: &LinearProgram<S>, sol: &LpSolution<S>) -> DualCheck<S> {
    let y = &sol.duals;
    let mut reduced = S::zero();
    for (j, col) in lp.cols.iter().enumerate() {
        let mut ya = S::zero();
        for (r, v) in col {
            ya = ya + y[*r as usize].clone() * v.clone();
        }
        let d = lp.objective[j].clone() - ya;
        // Max: d <= 0 required; Min: d >= 0 required.
        let viol = match lp.direction {
            Direction::Maximize => d,
            Direction::Minimize => S::zero() - d,
        };
        if viol > reduced {
            reduced = viol;
        }
    }
    let mut sign = S::zero();
    for (i, op) in lp.ops.iter().enumerate() {
        // Max: Le rows need y >= 0, Ge rows y <= 0; flipped for Min.
        let v = match (lp.direction, op) {
            (_, RowOp::Eq) => S::zero(),
            (Direction::Maximize, RowOp::Le) | (Direction::Minimize, RowOp::Ge) => {
                S::zero() - y[i].clone()
            }
            (Direction::Maximize, RowOp::Ge) | (Direction::Minimize, RowOp::Le) => y[i].clone(),
        };
        if v > sign {
            sign = v;
        }
    }
    let yb = y
        .iter()
        .zip(lp.rhs.iter())
        .fold(S::zero(), |acc, (yi, bi)| acc + yi.clone() * bi.clone());
    DualCheck {
        reduced_cost_violation: reduced,
        sign_violation: sign,
        value_gap: (yb - sol.objective.clone()).abs(),
    }
}
