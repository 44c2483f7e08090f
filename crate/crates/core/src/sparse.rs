//! Compressed-row storage for vectorized superoperators.

use crate::{CMatrix, C64};

/// Complex CSR matrix. Rows keep their column indices sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

/// Accumulates `(row, col, value)` triplets; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != 0.0 || v.im != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        assert!(row < self.nrows && col < self.ncols, "triplet out of bounds");
        self.entries.push((row, col, value));
    }

    /// Adds `scale · (a ⊗ b)`.
    pub fn add_kron(&mut self, scale: C64, a: &CMatrix, b: &CMatrix) {
        let (pb, qb) = b.shape();
        assert_eq!(a.nrows() * pb, self.nrows);
        assert_eq!(a.ncols() * qb, self.ncols);
        let bnz = nonzeros(b);
        for (ia, ja, va) in nonzeros(a) {
            let sa = scale * va;
            for &(ib, jb, vb) in &bnz {
                self.entries.push((ia * pb + ib, ja * qb + jb, sa * vb));
            }
        }
    }

    pub fn build(mut self) -> SparseMatrix {
        // stable: duplicates are summed in insertion order
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut rows = Vec::with_capacity(self.entries.len());
        let mut iter = self.entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.re != 0.0 || v.im != 0.0 {
                rows.push(r);
                indices.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
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

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (row, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
            let mut acc = C64::new(0.0, 0.0);
            for (&c, &v) in self.indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Entry lookup; zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> C64 {
        let (lo, hi) = (self.indptr[row], self.indptr[row + 1]);
        match self.indices[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut b = TripletBuilder::new(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            b.push(r, c, v);
        }
        for (r, c, v) in other.iter() {
            b.push(r, c, -v);
        }
        b.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when every stored entry lies on the diagonal.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 1, c(1.0, 0.0));
        b.push(0, 1, c(2.0, 1.0));
        b.push(1, 0, c(1.0, 0.0));
        b.push(1, 0, c(-1.0, 0.0));
        let m = b.build();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn kron_matches_dense_kronecker() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(3.0, -1.0)]);
        let bm = CMatrix::from_row_slice(2, 3, &[
            c(0.0, 1.0), c(1.0, 0.0), c(0.0, 0.0),
            c(2.0, 0.0), c(0.0, 0.0), c(-1.0, 1.0),
        ]);
        let mut t = TripletBuilder::new(4, 6);
        t.add_kron(c(0.5, 0.0), &a, &bm);
        let dense = t.build().to_dense();
        let expect = a.kronecker(&bm) * c(0.5, 0.0);
        assert_eq!(dense, expect);
    }

    #[test]
    fn matvec() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(0, 0, c(1.0, 0.0));
        b.push(0, 2, c(0.0, 1.0));
        b.push(1, 1, c(2.0, 0.0));
        let m = b.build();
        let y = m.mul_vec(&[c(1.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)]);
        assert_eq!(y, vec![c(1.0, 2.0), c(2.0, 2.0)]);
        assert!(!m.is_diagonal());
    }
}
