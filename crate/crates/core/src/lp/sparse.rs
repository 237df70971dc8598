use alloc::vec;
use alloc::vec::Vec;

/// Compressed sparse column matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix { nrows, ncols, col_ptr: vec![0; ncols + 1], row_idx: Vec::new(), values: Vec::new() }
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped; rows within a column end up sorted.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[c + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            rows[next[c]] = r;
            vals[next[c]] = v;
            next[c] += 1;
        }
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            buf.clear();
            buf.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            buf.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < buf.len() {
                let r = buf[k].0;
                let mut v = 0.0;
                while k < buf.len() && buf[k].0 == r {
                    v += buf[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj != 0.0 {
                for (i, v) in self.col(j) {
                    y[i] += v * xj;
                }
            }
        }
        y
    }

    /// `x = Aᵀ y`
    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        (0..self.ncols).map(|j| self.col(j).map(|(i, v)| v * y[i]).sum()).collect()
    }

    /// Dense copy of row `i`, for diagnostics.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.ncols];
        for (r, c, v) in self.triplets() {
            if r == i {
                row[c] = v;
            }
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_multiply() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 2, 2.0), (0, 0, 1.5), (1, 0, -1.0), (0, 1, 0.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.mul_vec(&[1.0, 5.0, 2.0]), vec![2.5, 3.0]);
        assert_eq!(a.mul_t_vec(&[1.0, 1.0]), vec![1.5, 0.0, 2.0]);
        assert_eq!(a.dense_row(1), vec![-1.0, 0.0, 2.0]);
    }
}
