//! Reduction of a general LP to `min cᵀx, A x = b, x ≥ 0`.
//!
//! Fixed variables are substituted out, finite bounds shifted to zero,
//! inequalities get slacks, and free variables are eliminated through an
//! equality row they appear in (split into two nonnegative parts only when no
//! usable row exists). Eliminated rows are kept so the free values can be
//! back-substituted after the solve.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CscMatrix;
use super::StandardFormLP;

#[derive(Clone, Copy, Debug)]
enum ColMap {
    Fixed(f64),
    Lower { col: usize, lo: f64 },
    Upper { col: usize, hi: f64 },
    Free { col: usize },
}

#[derive(Clone, Debug)]
struct Elimination {
    col: usize,
    row: Vec<(usize, f64)>,
    rhs: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Recovery {
    maps: Vec<ColMap>,
    n_work: usize,
    final_of_work: Vec<Option<usize>>,
    // working column -> extra final column holding its negative part
    split_neg: Vec<Option<usize>>,
    eliminations: Vec<Elimination>,
}

#[derive(Clone, Debug)]
pub(crate) struct Reduced {
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub recovery: Recovery,
}

pub(crate) enum Presolved {
    Reduced(Reduced),
    /// A row reduced to `0 = rhs` with `rhs ≠ 0`.
    Infeasible,
}

type SparseRow = Vec<(usize, f64)>;

fn entry(row: &SparseRow, col: usize) -> Option<f64> {
    row.binary_search_by_key(&col, |e| e.0).ok().map(|k| row[k].1)
}

/// `row - factor * pivot`, dropping `col` and negligible cancellations.
fn axpy_row(row: &SparseRow, factor: f64, pivot: &SparseRow, drop_col: usize) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut p, mut q) = (0, 0);
    while p < row.len() || q < pivot.len() {
        let (col, v, scale) = if q >= pivot.len() || (p < row.len() && row[p].0 < pivot[q].0) {
            p += 1;
            (row[p - 1].0, row[p - 1].1, row[p - 1].1.abs())
        } else if p >= row.len() || pivot[q].0 < row[p].0 {
            q += 1;
            (pivot[q - 1].0, -factor * pivot[q - 1].1, 0.0)
        } else {
            p += 1;
            q += 1;
            let a = row[p - 1].1;
            let b = factor * pivot[q - 1].1;
            (row[p - 1].0, a - b, a.abs().max(b.abs()))
        };
        if col != drop_col && v != 0.0 && v.abs() > 1e-14 * scale {
            out.push((col, v));
        }
    }
    out
}

pub(crate) fn reduce(lp: &StandardFormLP) -> Presolved {
    let nvar = lp.objective.len();
    let mut maps = Vec::with_capacity(nvar);
    let mut n_work = 0;
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..nvar {
        let (l, u) = (lp.lower_bounds[j], lp.upper_bounds[j]);
        let map = if l == u {
            ColMap::Fixed(l)
        } else if l.is_finite() {
            let col = n_work;
            n_work += 1;
            if u.is_finite() {
                ub_rows.push((col, u - l));
            }
            ColMap::Lower { col, lo: l }
        } else if u.is_finite() {
            n_work += 1;
            ColMap::Upper { col: n_work - 1, hi: u }
        } else {
            n_work += 1;
            ColMap::Free { col: n_work - 1 }
        };
        maps.push(map);
    }

    // working column, sign, shift for a structural variable
    let place = |j: usize| -> Result<(usize, f64, f64), f64> {
        match maps[j] {
            ColMap::Fixed(v) => Err(v),
            ColMap::Lower { col, lo } => Ok((col, 1.0, lo)),
            ColMap::Upper { col, hi } => Ok((col, -1.0, hi)),
            ColMap::Free { col } => Ok((col, 1.0, 0.0)),
        }
    };

    let m_eq = lp.eq_matrix.nrows;
    let m_in = lp.ineq_matrix.nrows;
    let mut rows: Vec<SparseRow> = vec![Vec::new(); m_eq + m_in + ub_rows.len()];
    let mut rhs: Vec<f64> = Vec::with_capacity(rows.len());
    rhs.extend_from_slice(&lp.eq_rhs);
    rhs.extend_from_slice(&lp.ineq_rhs);
    for (row_off, mat) in [(0, &lp.eq_matrix), (m_eq, &lp.ineq_matrix)] {
        for (i, j, v) in mat.triplets() {
            match place(j) {
                Err(val) => rhs[row_off + i] -= v * val,
                Ok((col, sign, shift)) => {
                    rhs[row_off + i] -= v * shift;
                    rows[row_off + i].push((col, sign * v));
                }
            }
        }
    }
    for i in 0..m_in {
        rows[m_eq + i].push((n_work, 1.0));
        n_work += 1;
    }
    for (k, &(col, width)) in ub_rows.iter().enumerate() {
        rows[m_eq + m_in + k] = vec![(col, 1.0), (n_work, 1.0)];
        rhs.push(width);
        n_work += 1;
    }
    for row in rows.iter_mut() {
        row.sort_by_key(|e| e.0);
    }

    let mut cost = vec![0.0; n_work];
    for j in 0..nvar {
        if let Ok((col, sign, _)) = place(j) {
            cost[col] = -sign * lp.objective[j];
        }
    }

    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n_work];
    for (i, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            col_rows[c].push(i);
        }
    }
    let mut active = vec![true; rows.len()];
    let mut eliminated = vec![false; n_work];
    let mut eliminations = Vec::new();
    let free_cols: Vec<usize> =
        maps.iter().filter_map(|m| if let ColMap::Free { col } = m { Some(*col) } else { None }).collect();
    let mut unresolved = Vec::new();
    for &f in &free_cols {
        let mut best: Option<(usize, (bool, usize))> = None;
        for &i in &col_rows[f] {
            if !active[i] {
                continue;
            }
            let Some(v) = entry(&rows[i], f) else { continue };
            let row_max = rows[i].iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
            if v.abs() < 0.01 * row_max {
                continue;
            }
            let key = (i >= m_eq, rows[i].len());
            if best.is_none_or(|(_, k)| key < k) {
                best = Some((i, key));
            }
        }
        let Some((r, _)) = best else {
            unresolved.push(f);
            continue;
        };
        let pivot = rows[r].clone();
        let piv = entry(&pivot, f).unwrap();
        let targets: Vec<usize> = col_rows[f].clone();
        let mut seen = Vec::new();
        for k in targets {
            if k == r || !active[k] || seen.contains(&k) {
                continue;
            }
            seen.push(k);
            let Some(v) = entry(&rows[k], f) else { continue };
            let factor = v / piv;
            rows[k] = axpy_row(&rows[k], factor, &pivot, f);
            rhs[k] -= factor * rhs[r];
            for &(c, _) in &pivot {
                if c != f && !col_rows[c].contains(&k) {
                    col_rows[c].push(k);
                }
            }
        }
        if cost[f] != 0.0 {
            let factor = cost[f] / piv;
            for &(c, v) in &pivot {
                cost[c] -= factor * v;
            }
            cost[f] = 0.0;
        }
        active[r] = false;
        eliminated[f] = true;
        eliminations.push(Elimination { col: f, row: pivot, rhs: rhs[r] });
    }

    let mut final_of_work = vec![None; n_work];
    let mut n_final = 0;
    for w in 0..n_work {
        if !eliminated[w] {
            final_of_work[w] = Some(n_final);
            n_final += 1;
        }
    }
    let mut split_neg = vec![None; n_work];
    for &f in &unresolved {
        split_neg[f] = Some(n_final);
        n_final += 1;
    }

    let mut triplets = Vec::new();
    let mut b = Vec::new();
    let mut c = vec![0.0; n_final];
    for w in 0..n_work {
        if let Some(fc) = final_of_work[w] {
            c[fc] = cost[w];
            if let Some(neg) = split_neg[w] {
                c[neg] = -cost[w];
            }
        }
    }
    let scale_b = crate::math::max_abs(&rhs).max(1.0);
    for i in 0..rows.len() {
        if !active[i] {
            continue;
        }
        if rows[i].is_empty() {
            if rhs[i].abs() > 1e-9 * scale_b {
                return Presolved::Infeasible;
            }
            continue;
        }
        let r = b.len();
        for &(w, v) in &rows[i] {
            let fc = final_of_work[w].expect("eliminated column left in an active row");
            triplets.push((r, fc, v));
            if let Some(neg) = split_neg[w] {
                triplets.push((r, neg, -v));
            }
        }
        b.push(rhs[i]);
    }
    let a = CscMatrix::from_triplets(b.len(), n_final, &triplets);
    Presolved::Reduced(Reduced {
        a,
        b,
        c,
        recovery: Recovery { maps, n_work, final_of_work, split_neg, eliminations },
    })
}

impl Recovery {
    /// Maps a solution of the reduced problem back to the original variables.
    pub fn original(&self, x: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_work];
        for k in 0..self.n_work {
            if let Some(fc) = self.final_of_work[k] {
                w[k] = x[fc];
                if let Some(neg) = self.split_neg[k] {
                    w[k] -= x[neg];
                }
            }
        }
        for e in self.eliminations.iter().rev() {
            let mut acc = e.rhs;
            let mut piv = 0.0;
            for &(c, v) in &e.row {
                if c == e.col {
                    piv = v;
                } else {
                    acc -= v * w[c];
                }
            }
            w[e.col] = acc / piv;
        }
        self.maps
            .iter()
            .map(|m| match *m {
                ColMap::Fixed(v) => v,
                ColMap::Lower { col, lo } => lo + w[col],
                ColMap::Upper { col, hi } => hi - w[col],
                ColMap::Free { col } => w[col],
            })
            .collect()
    }
}
