//! Compressed sparse row matrices used for discrete operators and the
//! global system.

use faer::sparse::{SparseColMat, Triplet};

/// Row-major sparse matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds the matrix from `(row, col, value)` triplets, summing
    /// duplicates. Entries that sum to exactly zero are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Largest entry-wise absolute difference, treating missing entries as 0.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut worst = 0.0_f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - other.get(r, c)).abs());
            }
            for (c, v) in other.row(r) {
                worst = worst.max((v - self.get(r, c)).abs());
            }
        }
        worst
    }

    /// Sparse product `self * other`; exact zeros produced by cancellation
    /// are kept.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                indices.push(c);
                values.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t: Vec<(usize, usize, f64)> = self
            .triplets()
            .chain(other.triplets().map(|(r, c, v)| (r, c, s * v)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trip: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .expect("CSR entries are unique and in range")
    }
}

/// Incomplete LU factorization without fill, stored in one CSR pattern
/// (unit lower factor below the diagonal, upper factor on and above).
///
/// The factorization can run in a caller-chosen elimination order; saddle
/// point rows with a zero diagonal need to be eliminated after the
/// unknowns that fill their pivot.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
    /// `order[new] = old`.
    order: Vec<usize>,
}

impl Ilu0 {
    /// Factorization in the natural order. Fails with the original row
    /// index of the first vanishing pivot.
    pub fn new(a: &CsrMatrix) -> Result<Self, usize> {
        Self::with_order(a, (0..a.nrows).collect())
    }

    /// Factorization of the symmetrically permuted matrix, `order[k]` being
    /// the original index eliminated `k`-th.
    pub fn with_order(a: &CsrMatrix, order: Vec<usize>) -> Result<Self, usize> {
        assert_eq!(a.nrows, a.ncols, "ILU needs a square matrix");
        let n = a.nrows;
        assert_eq!(order.len(), n, "ordering length");
        let mut new_of = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            new_of[i] = k;
        }
        let t: Vec<(usize, usize, f64)> = a
            .triplets()
            .map(|(r, c, v)| (new_of[r], new_of[c], v))
            .chain((0..n).map(|i| (i, i, 0.0)))
            .collect();
        let mut lu = CsrMatrix::from_triplets(n, n, &t);
        let diag: Vec<usize> = (0..n)
            .map(|i| lu.indptr[i] + lu.indices[lu.indptr[i]..lu.indptr[i + 1]].binary_search(&i).unwrap())
            .collect();
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in start..end {
                pos[lu.indices[k]] = k;
            }
            for k in start..diag[i] {
                let c = lu.indices[k];
                let factor = lu.values[k] / lu.values[diag[c]];
                lu.values[k] = factor;
                for q in diag[c] + 1..lu.indptr[c + 1] {
                    let j = lu.indices[q];
                    if pos[j] != usize::MAX {
                        lu.values[pos[j]] -= factor * lu.values[q];
                    }
                }
            }
            for k in start..end {
                pos[lu.indices[k]] = usize::MAX;
            }
            let p = lu.values[diag[i]];
            if p == 0.0 || !p.is_finite() {
                return Err(order[i]);
            }
        }
        Ok(Self { lu, diag, order })
    }

    /// Solves `L U z = r` in the original numbering.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let m = &self.lu;
        let mut z: Vec<f64> = self.order.iter().map(|&i| r[i]).collect();
        for i in 0..m.nrows {
            let mut s = z[i];
            for k in m.indptr[i]..self.diag[i] {
                s -= m.values[k] * z[m.indices[k]];
            }
            z[i] = s;
        }
        for i in (0..m.nrows).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..m.indptr[i + 1] {
                s -= m.values[k] * z[m.indices[k]];
            }
            z[i] = s / m.values[self.diag[i]];
        }
        let mut out = vec![0.0; z.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = z[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 2.0), (2, 4.0)]);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![6.0, -1.0]);
    }

    #[test]
    fn product_and_sum_match_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = CsrMatrix::from_triplets(3, 2, &[(0, 1, 4.0), (1, 0, 5.0), (2, 0, 6.0), (2, 1, 1.0)]);
        let c = a.matmul(&b);
        assert_eq!(c.get(0, 0), 12.0);
        assert_eq!(c.get(0, 1), 6.0);
        assert_eq!(c.get(1, 0), 15.0);
        assert_eq!(c.get(1, 1), 0.0);
        let d = c.add_scaled(&c, -1.0);
        assert_eq!(d.max_abs_diff(&CsrMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn explicit_zero_equals_missing_entry() {
        let a = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 0.0)]);
        let b = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]);
        assert_eq!(a.max_abs_diff(&b), 0.0);
    }

    #[test]
    fn ilu_is_exact_without_fill() {
        // tridiagonal matrices factor without fill-in
        let mut t = Vec::new();
        for i in 0..5 {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -2.0));
            }
        }
        let a = CsrMatrix::from_triplets(5, 5, &t);
        let ilu = Ilu0::new(&a).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0, 1.5];
        let z = ilu.apply(&a.matvec(&x));
        for (u, v) in z.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
        // a zero pivot that elimination cannot repair
        assert_eq!(Ilu0::new(&CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)])).unwrap_err(), 0);
        // a zero diagonal filled by its neighbour: [[0, 1], [1, 2]]
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        assert!(Ilu0::new(&b).is_err());
        let z = Ilu0::with_order(&b, vec![1, 0]).unwrap().apply(&[1.0, 4.0]);
        assert!((z[0] - 2.0).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
    }
}
