//! Brute-force vertex enumeration for small programs.
//!
//! Independent of the simplex path: slack variables turn the program into
//! `A x = b, x >= 0`, the rows are rank-reduced, and every basis-sized
//! column subset is solved densely. Exponential on purpose; guarded by a
//! hard variable cap.

use alloc::vec;
use alloc::vec::Vec;



use super::{LinearProgram, LpError, RowOp};
use crate::scalar::Scalar;

/// Hard cap on standard-form variables (structural + slack).
pub const VERTEX_VAR_CAP: usize = 24;

/// All vertices (basic feasible solutions projected to the structural
/// variables) of the feasible region, deduplicated and sorted. Errors with
/// [`LpError::TooLarge`] above [`VERTEX_VAR_CAP`] variables and
/// [`LpError::Infeasible`] when the equality system is inconsistent or no
/// vertex exists.
pub fn enumerate_vertices<S: Scalar>(lp: &LinearProgram<S>) -> Result<Vec<Vec<S>>, LpError<S>> {
    let m = lp.n_rows();
    let n = lp.n_cols();
    let n_slack = lp.ops().iter().filter(|op| **op != RowOp::Eq).count();
    let total = n + n_slack;
    if total > VERTEX_VAR_CAP {
        return Err(LpError::TooLarge {
            size: total,
            cap: VERTEX_VAR_CAP,
        });
    }

    // Dense standard form.
    let mut a = vec![vec![S::zero(); total]; m];
    let b: Vec<S> = lp.rhs().to_vec();
    for j in 0..n {
        for (r, v) in lp.column(j) {
            a[*r as usize][j] = v.clone();
        }
    }
    let mut slack = n;
    for (i, op) in lp.ops().iter().enumerate() {
        match op {
            RowOp::Le => {
                a[i][slack] = S::one();
                slack += 1;
            }
            RowOp::Ge => {
                a[i][slack] = S::zero() - S::one();
                slack += 1;
            }
            RowOp::Eq => {}
        }
    }

    let tol = feas_tol::<S>();

    // Row-reduce [A | b] to find an independent row set and catch
    // inconsistency (0 = nonzero).
    let rank_rows = {
        let mut work_a = a.clone();
        let mut work_b = b.clone();
        let mut rows: Vec<usize> = (0..m).collect();
        let mut pivots: Vec<usize> = Vec::new();
        let mut rr = 0;
        for col in 0..total {
            let mut best = None;
            let mut best_mag = tol.clone();
            for r in rr..m {
                let mag = work_a[rows[r]][col].abs();
                if mag > best_mag {
                    best_mag = mag;
                    best = Some(r);
                }
            }
            let Some(pr) = best else { continue };
            rows.swap(rr, pr);
            let p = rows[rr];
            let piv = work_a[p][col].clone();
            for r in rows.iter().skip(rr + 1).copied().collect::<Vec<_>>() {
                let f = work_a[r][col].clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for k in col..total {
                    work_a[r][k] = work_a[r][k].clone() - f.clone() * work_a[p][k].clone();
                }
                work_b[r] = work_b[r].clone() - f.clone() * work_b[p].clone();
            }
            pivots.push(p);
            rr += 1;
            if rr == m {
                break;
            }
        }
        // Dependent rows must have zero residual right-hand side.
        for r in rows.iter().skip(rr) {
            if work_b[*r].abs() > tol {
                return Err(LpError::Infeasible {
                    residual: work_b[*r].abs(),
                });
            }
        }
        pivots.sort_unstable();
        pivots
    };

    let r = rank_rows.len();
    let ar: Vec<Vec<S>> = rank_rows.iter().map(|&i| a[i].clone()).collect();
    let br: Vec<S> = rank_rows.iter().map(|&i| b[i].clone()).collect();

    let mut found: Vec<Vec<S>> = Vec::new();
    if r == 0 {
        // Only the origin can be a vertex.
        found.push(vec![S::zero(); n]);
        return Ok(found);
    }

    let mut subset: Vec<usize> = (0..r).collect();
    loop {
        if let Some(xj) = solve_square(&ar, &br, &subset, &tol) {
            if xj.iter().all(|v| *v >= S::zero() - tol.clone()) {
                let mut full = vec![S::zero(); total];
                for (slot, j) in subset.iter().enumerate() {
                    full[*j] = if xj[slot] < S::zero() {
                        S::zero()
                    } else {
                        xj[slot].clone()
                    };
                }
                if satisfies(&a, lp.rhs(), &full, &tol) {
                    found.push(full[..n].to_vec());
                }
            }
        }
        if !next_combination(&mut subset, total) {
            break;
        }
    }

    if found.is_empty() {
        return Err(LpError::Infeasible { residual: S::zero() });
    }

    found.sort_by(|p, q| {
        for (pv, qv) in p.iter().zip(q.iter()) {
            let ord = pv.total_cmp(qv);
            if ord != core::cmp::Ordering::Equal {
                return ord;
            }
        }
        core::cmp::Ordering::Equal
    });
    let dedup_tol = dedup_tol::<S>();
    found.dedup_by(|p, q| {
        p.iter()
            .zip(q.iter())
            .all(|(pv, qv)| (pv.clone() - qv.clone()).abs() <= dedup_tol)
    });
    Ok(found)
}

fn feas_tol<S: Scalar>() -> S {
    S::default_tol()
}

fn dedup_tol<S: Scalar>() -> S {
    if S::EXACT {
        S::zero()
    } else {
        S::from_ratio(1, 1_000_000) * S::from_ratio(1, 100)
    }
}

/// Solve the square system on the chosen columns; `None` when singular.
fn solve_square<S: Scalar>(ar: &[Vec<S>], br: &[S], cols: &[usize], tol: &S) -> Option<Vec<S>> {
    let r = ar.len();
    let mut mat = vec![vec![S::zero(); r + 1]; r];
    for (i, row) in ar.iter().enumerate() {
        for (slot, j) in cols.iter().enumerate() {
            mat[i][slot] = row[*j].clone();
        }
        mat[i][r] = br[i].clone();
    }
    for col in 0..r {
        let mut piv_row = col;
        let mut piv_mag = mat[col][col].abs();
        for row in col + 1..r {
            let mag = mat[row][col].abs();
            if mag > piv_mag {
                piv_mag = mag;
                piv_row = row;
            }
        }
        if piv_mag <= *tol {
            return None;
        }
        mat.swap(col, piv_row);
        let piv = mat[col][col].clone();
        for k in col..=r {
            mat[col][k] = mat[col][k].clone() / piv.clone();
        }
        for row in 0..r {
            if row == col {
                continue;
            }
            let f = mat[row][col].clone();
            if f.is_zero() {
                continue;
            }
            for k in col..=r {
                mat[row][k] = mat[row][k].clone() - f.clone() * mat[col][k].clone();
            }
        }
    }
    Some((0..r).map(|i| mat[i][r].clone()).collect())
}

/// Check the candidate against every original row (dependent ones too).
fn satisfies<S: Scalar>(a: &[Vec<S>], rhs: &[S], x: &[S], tol: &S) -> bool {
    for (row, b) in a.iter().zip(rhs.iter()) {
        let mut acc = S::zero();
        for (coeff, v) in row.iter().zip(x.iter()) {
            if !coeff.is_zero() && !v.is_zero() {
                acc = acc + coeff.clone() * v.clone();
            }
        }
        if (acc - b.clone()).abs() > *tol {
            return false;
        }
    }
    true
}

/// Advance `subset` to the next lexicographic `k`-combination of `0..total`.
fn next_combination(subset: &mut [usize], total: usize) -> bool {
    let k = subset.len();
    if k == 0 || k > total {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < total - (k - i) {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
