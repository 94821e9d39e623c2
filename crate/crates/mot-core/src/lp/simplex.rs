//! Two-phase revised simplex with an explicit dense basis inverse.

use alloc::vec;
use alloc::vec::Vec;



use super::{Direction, LinearProgram, LpError, LpSolution, RowOp};
use crate::scalar::Scalar;

/// Standard form: maximize, `A x = b`, `b >= 0`, columns ordered as
/// structural | slack/surplus | artificial.
struct Standard<S> {
    m: usize,
    n_struct: usize,
    art_start: usize,
    cols: Vec<Vec<(u32, S)>>,
    b: Vec<S>,
    /// Rows multiplied by -1 during normalization (duals flip back).
    flipped: Vec<bool>,
    /// Objective negated (input was a minimization).
    negated: bool,
    phase1_cost: Vec<S>,
    phase2_cost: Vec<S>,
    initial_basis: Vec<usize>,
}

fn standardize<S: Scalar>(lp: &LinearProgram<S>) -> Standard<S> {
    let m = lp.n_rows();
    let n = lp.n_cols();
    let negated = lp.direction() == Direction::Minimize;

    let mut flipped = vec![false; m];
    let mut ops: Vec<RowOp> = lp.ops().to_vec();
    let mut b: Vec<S> = lp.rhs().to_vec();
    for i in 0..m {
        if b[i] < S::zero() {
            flipped[i] = true;
            b[i] = S::zero() - b[i].clone();
            ops[i] = match ops[i] {
                RowOp::Eq => RowOp::Eq,
                RowOp::Le => RowOp::Ge,
                RowOp::Ge => RowOp::Le,
            };
        }
    }

    let mut cols: Vec<Vec<(u32, S)>> = Vec::with_capacity(n + m);
    let mut phase2_cost: Vec<S> = Vec::with_capacity(n + m);
    for j in 0..n {
        let col = lp
            .column(j)
            .iter()
            .map(|(r, v)| {
                let v = if flipped[*r as usize] {
                    S::zero() - v.clone()
                } else {
                    v.clone()
                };
                (*r, v)
            })
            .collect();
        cols.push(col);
        let c = lp.objective()[j].clone();
        phase2_cost.push(if negated { S::zero() - c } else { c });
    }

    // Slack (+1) for Le, surplus (-1) for Ge; slacks start basic, Ge and Eq
    // rows get artificials.
    let mut initial_basis = vec![usize::MAX; m];
    for (i, op) in ops.iter().enumerate() {
        match op {
            RowOp::Le => {
                cols.push(vec![(i as u32, S::one())]);
                phase2_cost.push(S::zero());
                initial_basis[i] = cols.len() - 1;
            }
            RowOp::Ge => {
                cols.push(vec![(i as u32, S::zero() - S::one())]);
                phase2_cost.push(S::zero());
            }
            RowOp::Eq => {}
        }
    }
    let art_start = cols.len();
    let mut phase1_cost = vec![S::zero(); art_start];
    for (i, slot) in initial_basis.iter_mut().enumerate() {
        if *slot == usize::MAX {
            cols.push(vec![(i as u32, S::one())]);
            phase2_cost.push(S::zero());
            phase1_cost.push(S::zero() - S::one());
            *slot = cols.len() - 1;
        }
    }

    Standard {
        m,
        n_struct: n,
        art_start,
        cols,
        b,
        flipped,
        negated,
        phase1_cost,
        phase2_cost,
        initial_basis,
    }
}

struct Engine<'a, S> {
    std: &'a Standard<S>,
    /// Dense row-major inverse of the basis matrix.
    binv: Vec<S>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    xb: Vec<S>,
    iterations: usize,
    pivots_since_refactor: usize,
    degenerate_streak: usize,
    bland: bool,
    /// Keep Bland's rule on for the whole run (restart-after-failure mode).
    force_bland: bool,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
fn bland_trigger(m: usize) -> usize {
    2 * m + 20
}

fn iteration_cap(m: usize, n: usize) -> usize {
    1_000 + 60 * m + 4 * n
}

impl<'a, S: Scalar> Engine<'a, S> {
    fn new(std: &'a Standard<S>, force_bland: bool) -> Self {
        let m = std.m;
        let mut binv = vec![S::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = S::one();
        }
        let mut in_basis = vec![false; std.cols.len()];
        for &j in &std.initial_basis {
            in_basis[j] = true;
        }
        Engine {
            std,
            binv,
            basis: std.initial_basis.clone(),
            in_basis,
            xb: std.b.clone(),
            iterations: 0,
            pivots_since_refactor: 0,
            degenerate_streak: 0,
            bland: force_bland,
            force_bland,
        }
    }

    /// Rebuild the inverse more aggressively in the cautious restart mode.
    fn refactor_period(&self) -> usize {
        if self.force_bland {
            16
        } else {
            64
        }
    }

    fn feas_tol() -> S {
        S::default_tol()
    }

    /// Pivot magnitudes below this are treated as structural zeros.
    fn pivot_tol() -> S {
        if S::EXACT {
            S::zero()
        } else {
            S::from_ratio(1, 1_000_000_000) * S::from_ratio(1, 100)
        }
    }

    /// `B^-1 A_j`.
    fn ftran(&self, j: usize) -> Vec<S> {
        let m = self.std.m;
        let mut w = vec![S::zero(); m];
        for (i, v) in &self.std.cols[j] {
            let i = *i as usize;
            for r in 0..m {
                let e = &self.binv[r * m + i];
                if !e.is_zero() {
                    w[r] = w[r].clone() + e.clone() * v.clone();
                }
            }
        }
        w
    }

    /// `y = c_B B^-1` for the given cost vector.
    fn duals(&self, cost: &[S]) -> Vec<S> {
        let m = self.std.m;
        let mut y = vec![S::zero(); m];
        for r in 0..m {
            let cb = &cost[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for i in 0..m {
                let e = &self.binv[r * m + i];
                if !e.is_zero() {
                    y[i] = y[i].clone() + cb.clone() * e.clone();
                }
            }
        }
        y
    }

    /// Entering column: positive reduced cost, Dantzig (largest, lowest
    /// index on ties) or Bland (lowest index) when the degenerate streak
    /// tripped. Artificials never re-enter. With `lock` set, only columns
    /// whose reduced cost under the lock vector is zero may enter, which
    /// confines every pivot to the lock objective's optimal face.
    fn price(&self, cost: &[S], y: &[S], lock: Option<&[S]>) -> Option<usize> {
        let tol = Self::feas_tol();
        let y_lock = lock.map(|lc| self.duals(lc));
        let mut best: Option<(usize, S)> = None;
        for j in 0..self.std.art_start {
            if self.in_basis[j] {
                continue;
            }
            let mut d = cost[j].clone();
            for (r, v) in &self.std.cols[j] {
                d = d - y[*r as usize].clone() * v.clone();
            }
            if d <= tol {
                continue;
            }
            if let (Some(lc), Some(yl)) = (lock, &y_lock) {
                let mut dl = lc[j].clone();
                for (r, v) in &self.std.cols[j] {
                    dl = dl - yl[*r as usize].clone() * v.clone();
                }
                if dl.abs() > tol {
                    continue;
                }
            }
            if self.bland {
                return Some(j);
            }
            match &best {
                Some((_, bd)) if *bd >= d => {}
                _ => best = Some((j, d)),
            }
        }
        best.map(|(j, _)| j)
    }

    /// Leaving row. Exact arithmetic and Bland mode: minimum ratio, ties
    /// to the lowest basis column id. Bland's guarantee needs this exact
    /// rule on the leaving side too, not just lowest-index entering.
    /// Doubles otherwise: two-pass Harris test — relax the minimum ratio
    /// by the feasibility tolerance, then take the largest pivot inside
    /// the relaxed range, because tiny pivots poison the basis inverse.
    fn ratio_test(&self, w: &[S]) -> Option<usize> {
        let ptol = Self::pivot_tol();
        if S::EXACT || self.bland {
            let mut best: Option<(usize, S)> = None;
            for r in 0..self.std.m {
                if w[r] <= ptol {
                    continue;
                }
                let theta = self.xb[r].clone() / w[r].clone();
                match &best {
                    Some((br, bt)) => {
                        if theta < *bt || (theta == *bt && self.basis[r] < self.basis[*br]) {
                            best = Some((r, theta));
                        }
                    }
                    None => best = Some((r, theta)),
                }
            }
            return best.map(|(r, _)| r);
        }
        let delta = Self::feas_tol();
        let mut relaxed: Option<S> = None;
        for r in 0..self.std.m {
            if w[r] <= ptol {
                continue;
            }
            let t = (self.xb[r].clone() + delta.clone()) / w[r].clone();
            match &relaxed {
                Some(bt) if *bt <= t => {}
                _ => relaxed = Some(t),
            }
        }
        let relaxed = relaxed?;
        let mut pick: Option<usize> = None;
        for r in 0..self.std.m {
            if w[r] <= ptol {
                continue;
            }
            let theta = self.xb[r].clone() / w[r].clone();
            if theta > relaxed {
                continue;
            }
            match pick {
                Some(p) if w[r] <= w[p] => {}
                _ => pick = Some(r),
            }
        }
        pick
    }

    fn pivot(&mut self, enter: usize, leave_row: usize, w: Vec<S>) {
        let m = self.std.m;
        let theta = self.xb[leave_row].clone() / w[leave_row].clone();
        if theta <= Self::pivot_tol() {
            self.degenerate_streak += 1;
            if self.degenerate_streak > bland_trigger(m) {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
            self.bland = self.force_bland;
        }

        let piv = w[leave_row].clone();
        for i in 0..m {
            let e = self.binv[leave_row * m + i].clone() / piv.clone();
            self.binv[leave_row * m + i] = e;
        }
        self.xb[leave_row] = theta.clone();
        for r in 0..m {
            if r == leave_row || w[r].is_zero() {
                continue;
            }
            for i in 0..m {
                let base = self.binv[leave_row * m + i].clone();
                if base.is_zero() {
                    continue;
                }
                self.binv[r * m + i] = self.binv[r * m + i].clone() - w[r].clone() * base;
            }
            self.xb[r] = self.xb[r].clone() - w[r].clone() * theta.clone();
            if !S::EXACT && self.xb[r] < S::zero() && self.xb[r].abs() <= Self::feas_tol() {
                self.xb[r] = S::zero();
            }
        }

        self.in_basis[self.basis[leave_row]] = false;
        self.in_basis[enter] = true;
        self.basis[leave_row] = enter;
        self.iterations += 1;
        self.pivots_since_refactor += 1;
    }

    /// Rebuild `binv` and `xb` from scratch (drift control; doubles only).
    fn refactor(&mut self) -> Result<(), LpError<S>> {
        let m = self.std.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut mat = vec![S::zero(); m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, v) in &self.std.cols[j] {
                mat[(*i as usize) * m + r] = v.clone();
            }
        }
        let mut inv = vec![S::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = S::one();
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_mag = mat[col * m + col].abs();
            for r in col + 1..m {
                let mag = mat[r * m + col].abs();
                if mag > piv_mag {
                    piv_mag = mag;
                    piv_row = r;
                }
            }
            if piv_mag <= Self::pivot_tol() {
                return Err(LpError::SingularBasis);
            }
            if piv_row != col {
                for k in 0..m {
                    mat.swap(piv_row * m + k, col * m + k);
                    inv.swap(piv_row * m + k, col * m + k);
                }
            }
            let piv = mat[col * m + col].clone();
            for k in 0..m {
                mat[col * m + k] = mat[col * m + k].clone() / piv.clone();
                inv[col * m + k] = inv[col * m + k].clone() / piv.clone();
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = mat[r * m + col].clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..m {
                    mat[r * m + k] = mat[r * m + k].clone() - f.clone() * mat[col * m + k].clone();
                    inv[r * m + k] = inv[r * m + k].clone() - f.clone() * inv[col * m + k].clone();
                }
            }
        }
        self.binv = inv;
        let m_ = m;
        let mut xb = vec![S::zero(); m_];
        for r in 0..m_ {
            for i in 0..m_ {
                let e = &self.binv[r * m_ + i];
                if !e.is_zero() {
                    xb[r] = xb[r].clone() + e.clone() * self.std.b[i].clone();
                }
            }
            if !S::EXACT && xb[r] < S::zero() && xb[r].abs() <= Self::feas_tol() {
                xb[r] = S::zero();
            }
        }
        self.xb = xb;
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Run pivots until the given cost prices out. `early_stop` ends phase
    /// one as soon as every artificial sits at zero. `lock` restricts
    /// entering columns to the lock objective's optimal face.
    fn optimize(&mut self, cost: &[S], early_stop: bool, lock: Option<&[S]>) -> Result<(), LpError<S>> {
        // Bland's rule trades speed for termination; give it headroom.
        let slow = if self.force_bland { 4 } else { 1 };
        let cap = slow * iteration_cap(self.std.m, self.std.art_start);
        loop {
            if self.iterations > cap {
                return Err(LpError::IterationLimit);
            }
            if early_stop && self.artificial_load() <= Self::feas_tol() {
                return Ok(());
            }
            if !S::EXACT && self.pivots_since_refactor >= self.refactor_period() {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let enter = match self.price(cost, &y, lock) {
                Some(j) => j,
                None => {
                    // Doubles: confirm optimality against a fresh inverse.
                    if !S::EXACT && self.pivots_since_refactor > 0 {
                        self.refactor()?;
                        let y = self.duals(cost);
                        match self.price(cost, &y, lock) {
                            Some(j) => j,
                            None => return Ok(()),
                        }
                    } else {
                        return Ok(());
                    }
                }
            };
            let w = self.ftran(enter);
            let leave = match self.ratio_test(&w) {
                Some(r) => r,
                None => return Err(LpError::Unbounded),
            };
            self.pivot(enter, leave, w);
        }
    }

    /// Sum of basic artificial values.
    fn artificial_load(&self) -> S {
        let mut s = S::zero();
        for (r, &j) in self.basis.iter().enumerate() {
            if j >= self.std.art_start {
                s = s + self.xb[r].clone();
            }
        }
        s
    }

    /// Drive artificials out of the basis where the row has any usable
    /// structural/slack pivot; rows without one are dependent on the
    /// others, and their artificial is inert: its B^-1 A row is entirely
    /// zero, so no later pivot can move it off zero.
    fn purge_artificials(&mut self) -> Vec<usize> {
        let m = self.std.m;
        let mut redundant = Vec::new();
        for r in 0..m {
            if self.basis[r] < self.std.art_start {
                continue;
            }
            let mut replaced = false;
            for j in 0..self.std.art_start {
                if self.in_basis[j] {
                    continue;
                }
                // Row r of B^-1 A_j.
                let mut coeff = S::zero();
                for (i, v) in &self.std.cols[j] {
                    let e = &self.binv[r * m + *i as usize];
                    if !e.is_zero() {
                        coeff = coeff + e.clone() * v.clone();
                    }
                }
                if coeff.abs() > Self::pivot_tol() {
                    let w = self.ftran(j);
                    self.pivot(j, r, w);
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                redundant.push(r);
            }
        }
        redundant
    }
}

pub(super) fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>, LpError<S>> {
    let std = standardize(lp);
    retrying(&std, None).map(|(primary, _)| primary)
}

/// Solve, then re-optimize `secondary` over the primary optimal face by
/// continuing from the optimal basis with entering columns restricted to
/// zero primary reduced cost. Pivoting on such a column leaves every
/// primary reduced cost unchanged, so the face is never left.
pub(super) fn solve_lexicographic<S: Scalar>(
    lp: &LinearProgram<S>,
    secondary: &[S],
    secondary_direction: Direction,
) -> Result<(LpSolution<S>, LpSolution<S>), LpError<S>> {
    let std = standardize(lp);
    let negated = secondary_direction == Direction::Minimize;
    let mut cost: Vec<S> = secondary
        .iter()
        .map(|c| if negated { S::zero() - c.clone() } else { c.clone() })
        .collect();
    cost.resize(std.cols.len(), S::zero());
    let (primary, refined) = retrying(&std, Some((&cost, negated)))?;
    Ok((primary, refined.expect("lexicographic run returns a refined stage")))
}

/// A singular refactorization or a stalled pivot sequence means
/// floating-point drift or degenerate cycling, not a property of the
/// problem: rerun once from scratch in the cautious mode (Bland pivoting
/// throughout, frequent refactorization).
fn retrying<S: Scalar>(
    std: &Standard<S>,
    lex: Option<(&[S], bool)>,
) -> Result<(LpSolution<S>, Option<LpSolution<S>>), LpError<S>> {
    match run(std, false, lex) {
        Err(LpError::SingularBasis | LpError::IterationLimit) if !S::EXACT => run(std, true, lex),
        other => other,
    }
}

fn run<S: Scalar>(
    std: &Standard<S>,
    force_bland: bool,
    lex: Option<(&[S], bool)>,
) -> Result<(LpSolution<S>, Option<LpSolution<S>>), LpError<S>> {
    let mut eng = Engine::new(std, force_bland);

    let has_artificials = std.cols.len() > std.art_start;
    if has_artificials {
        eng.optimize(&std.phase1_cost, true, None)?;
        let residual = eng.artificial_load();
        if residual > Engine::<S>::feas_tol() {
            return Err(LpError::Infeasible { residual });
        }
    }
    let redundant_rows = eng.purge_artificials();
    eng.bland = eng.force_bland;
    eng.degenerate_streak = 0;
    eng.optimize(&std.phase2_cost, false, None)?;
    let primary = extract(&eng, &std.phase2_cost, std.negated, &redundant_rows);

    let refined = match lex {
        None => None,
        Some((cost, negated)) => {
            eng.bland = eng.force_bland;
            eng.degenerate_streak = 0;
            eng.optimize(cost, false, Some(&std.phase2_cost))?;
            Some(extract(&eng, cost, negated, &redundant_rows))
        }
    };
    Ok((primary, refined))
}

/// Read the current basic solution off the engine, priced under `cost`
/// (a standard-form maximization vector; `negated` flips the reported
/// objective and duals back to the caller's sense).
fn extract<S: Scalar>(
    eng: &Engine<'_, S>,
    cost: &[S],
    negated: bool,
    redundant_rows: &[usize],
) -> LpSolution<S> {
    let std = eng.std;
    let mut x = vec![S::zero(); std.n_struct];
    let mut basis = vec![None; std.m];
    for (r, &j) in eng.basis.iter().enumerate() {
        if j < std.n_struct {
            let v = if !S::EXACT && eng.xb[r] < S::zero() {
                S::zero()
            } else {
                eng.xb[r].clone()
            };
            x[j] = v;
            basis[r] = Some(j);
        }
    }

    let mut objective = S::zero();
    for (r, &j) in eng.basis.iter().enumerate() {
        let c = &cost[j];
        if !c.is_zero() {
            objective = objective + c.clone() * eng.xb[r].clone();
        }
    }

    let mut duals = eng.duals(cost);
    for (i, flip) in std.flipped.iter().enumerate() {
        if *flip {
            duals[i] = S::zero() - duals[i].clone();
        }
    }
    if negated {
        objective = S::zero() - objective;
        for d in duals.iter_mut() {
            *d = S::zero() - d.clone();
        }
    }

    LpSolution {
        x,
        objective,
        duals,
        basis,
        redundant_rows: redundant_rows.to_vec(),
        iterations: eng.iterations,
    }
}
