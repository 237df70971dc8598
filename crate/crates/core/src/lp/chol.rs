//! Sparse Cholesky factorization of normal matrices `A diag(d) Aᵀ`.
//!
//! The symbolic phase (minimum-degree ordering, fill pattern, assembly map)
//! runs once per LP; each interior-point iteration only refills values and
//! refactors.

use alloc::vec;
use alloc::vec::Vec;

use super::sparse::CscMatrix;

/// Pivot replacement for rows that turn out linearly dependent.
const HUGE_PIVOT: f64 = 1e64;

#[derive(Clone, Debug)]
pub struct NormalCholesky {
    m: usize,
    perm: Vec<usize>,
    // L by columns in permuted order, diagonal first then rows ascending
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    // per row j of L: (column k < j, slot of L[j,k])
    rp: Vec<usize>,
    rslot: Vec<usize>,
    rcol: Vec<usize>,
    // assembly: for every column of A, pairs of value indices into A.values and target slot
    pair_ptr: Vec<usize>,
    pairs: Vec<(usize, usize, usize)>,
    work: Vec<f64>,
    pub dependent_rows: usize,
}

impl NormalCholesky {
    pub fn analyze(a: &CscMatrix) -> Self {
        let m = a.nrows;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        for j in 0..a.ncols {
            let rows = &a.row_idx[a.col_ptr[j]..a.col_ptr[j + 1]];
            for &r in rows {
                for &s in rows {
                    if r != s {
                        adj[r].push(s);
                    }
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }

        // Minimum degree on the elimination graph. Each eliminated vertex's
        // live neighbourhood is exactly its column pattern in L.
        let mut alive = vec![true; m];
        let mut perm = Vec::with_capacity(m);
        let mut patterns: Vec<Vec<usize>> = Vec::with_capacity(m);
        let mut merged = Vec::new();
        for _ in 0..m {
            let mut v = usize::MAX;
            let mut best = usize::MAX;
            for u in 0..m {
                if alive[u] && adj[u].len() < best {
                    best = adj[u].len();
                    v = u;
                }
            }
            alive[v] = false;
            let nb: Vec<usize> = adj[v].iter().copied().filter(|&u| alive[u]).collect();
            for &u in &nb {
                merged.clear();
                let old = core::mem::take(&mut adj[u]);
                let (mut p, mut q) = (0, 0);
                while p < old.len() || q < nb.len() {
                    let x = if q >= nb.len() || (p < old.len() && old[p] <= nb[q]) {
                        let x = old[p];
                        if q < nb.len() && nb[q] == x {
                            q += 1;
                        }
                        p += 1;
                        x
                    } else {
                        let x = nb[q];
                        q += 1;
                        x
                    };
                    if x != u && alive[x] {
                        merged.push(x);
                    }
                }
                adj[u] = merged.clone();
            }
            adj[v] = Vec::new();
            perm.push(v);
            patterns.push(nb);
        }
        let mut pinv = vec![0usize; m];
        for (p, &v) in perm.iter().enumerate() {
            pinv[v] = p;
        }

        let mut lp = vec![0usize; m + 1];
        let mut li = Vec::new();
        for (p, pat) in patterns.iter().enumerate() {
            li.push(p);
            let mut rows: Vec<usize> = pat.iter().map(|&v| pinv[v]).collect();
            rows.sort_unstable();
            li.extend(rows);
            lp[p + 1] = li.len();
        }

        let mut row_count = vec![0usize; m + 1];
        for k in 0..m {
            for s in lp[k] + 1..lp[k + 1] {
                row_count[li[s] + 1] += 1;
            }
        }
        for j in 0..m {
            row_count[j + 1] += row_count[j];
        }
        let rp = row_count.clone();
        let mut fill = row_count;
        let mut rslot = vec![0usize; rp[m]];
        let mut rcol = vec![0usize; rp[m]];
        for k in 0..m {
            for s in lp[k] + 1..lp[k + 1] {
                let j = li[s];
                rslot[fill[j]] = s;
                rcol[fill[j]] = k;
                fill[j] += 1;
            }
        }

        let slot_of = |row: usize, col: usize| -> usize {
            let base = lp[col];
            match li[base..lp[col + 1]].binary_search(&row) {
                Ok(off) => base + off,
                Err(_) => unreachable!("fill pattern misses ({row}, {col})"),
            }
        };
        let mut pair_ptr = vec![0usize; a.ncols + 1];
        let mut pairs = Vec::new();
        for j in 0..a.ncols {
            let lo = a.col_ptr[j];
            let hi = a.col_ptr[j + 1];
            for ea in lo..hi {
                for eb in ea..hi {
                    let pa = pinv[a.row_idx[ea]];
                    let pb = pinv[a.row_idx[eb]];
                    let (r, c) = if pa >= pb { (pa, pb) } else { (pb, pa) };
                    pairs.push((ea, eb, slot_of(r, c)));
                }
            }
            pair_ptr[j + 1] = pairs.len();
        }

        let nnz = li.len();
        NormalCholesky {
            m,
            perm,
            lp,
            li,
            lx: vec![0.0; nnz],
            rp,
            rslot,
            rcol,
            pair_ptr,
            pairs,
            work: vec![0.0; m],
            dependent_rows: 0,
        }
    }

    /// Assembles `A diag(d) Aᵀ + reg·I` and factors it in place.
    pub fn factor(&mut self, a: &CscMatrix, d: &[f64], reg: f64) {
        self.lx.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..a.ncols {
            let dj = d[j];
            if dj == 0.0 {
                continue;
            }
            for &(ea, eb, slot) in &self.pairs[self.pair_ptr[j]..self.pair_ptr[j + 1]] {
                self.lx[slot] += dj * a.values[ea] * a.values[eb];
            }
        }
        let mut max_diag: f64 = 0.0;
        for p in 0..self.m {
            let s = self.lp[p];
            self.lx[s] += reg;
            max_diag = max_diag.max(self.lx[s]);
        }
        let tiny = 1e-30 * max_diag.max(1e-300);

        self.dependent_rows = 0;
        let x = &mut self.work;
        for j in 0..self.m {
            let (lo, hi) = (self.lp[j], self.lp[j + 1]);
            for s in lo..hi {
                x[self.li[s]] = self.lx[s];
            }
            let diag_in = x[j];
            for r in self.rp[j]..self.rp[j + 1] {
                let slot_jk = self.rslot[r];
                let ljk = self.lx[slot_jk];
                let k_end = self.lp[self.rcol[r] + 1];
                for s in slot_jk..k_end {
                    x[self.li[s]] -= self.lx[s] * ljk;
                }
            }
            let mut dj = x[j];
            if !(dj > tiny.max(1e-14 * diag_in.abs())) {
                dj = HUGE_PIVOT;
                self.dependent_rows += 1;
            }
            let ljj = libm::sqrt(dj);
            self.lx[lo] = ljj;
            x[j] = 0.0;
            for s in lo + 1..hi {
                let i = self.li[s];
                self.lx[s] = x[i] / ljj;
                x[i] = 0.0;
            }
        }
    }

    /// Solves `M x = b` with the current factor.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.perm.iter().map(|&v| b[v]).collect();
        for j in 0..self.m {
            let (lo, hi) = (self.lp[j], self.lp[j + 1]);
            y[j] /= self.lx[lo];
            let yj = y[j];
            for s in lo + 1..hi {
                y[self.li[s]] -= self.lx[s] * yj;
            }
        }
        for j in (0..self.m).rev() {
            let (lo, hi) = (self.lp[j], self.lp[j + 1]);
            let mut v = y[j];
            for s in lo + 1..hi {
                v -= self.lx[s] * y[self.li[s]];
            }
            y[j] = v / self.lx[lo];
        }
        let mut x = vec![0.0; self.m];
        for (p, &v) in self.perm.iter().enumerate() {
            x[v] = y[p];
        }
        x
    }
}
