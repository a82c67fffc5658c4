//! Compressed sparse row matrices.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Triplet accumulator. Duplicate entries are summed on [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.entries.push((i, j, v));
    }

    /// Sorts by (row, column) with a stable sort, so the summation order of
    /// duplicates follows insertion order and results are reproducible.
    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            n_rows: d.len(),
            n_cols: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Keeps entries with `|a_ij| > drop_tol`.
    pub fn from_dense(a: &DMatrix<f64>, drop_tol: f64) -> Self {
        let mut coo = CooBuilder::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)].abs() > drop_tol {
                    coo.push(i, j, a[(i, j)]);
                }
            }
        }
        coo.build()
    }

    /// Builds from raw CSR arrays, validating the structural invariants.
    pub fn try_from_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: &str| Err(Error::DimensionMismatch(m.to_string()));
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return bad("row_ptr must have n_rows + 1 entries starting at 0");
        }
        if row_ptr[n_rows] != values.len() || col_idx.len() != values.len() {
            return bad("row_ptr[n_rows] must equal the number of stored values");
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return bad("row_ptr must be monotone");
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&j| j >= n_cols) {
                return bad("column indices must be strictly increasing and in range");
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols, "matvec: x has wrong length");
        assert_eq!(y.len(), self.n_rows, "matvec: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Bilinear form `x^T A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_rows);
        (0..self.n_rows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    /// Quadratic form `x^T A x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.form(x, x)
    }

    pub fn transpose(&self) -> Self {
        let mut coo = CooBuilder::with_capacity(self.n_cols, self.n_rows, self.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                coo.push(j, i, v);
            }
        }
        coo.build()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut coo = CooBuilder::with_capacity(self.n_rows, self.n_cols, self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                coo.push(i, j, a * v);
            }
            for (j, v) in other.row(i) {
                coo.push(i, j, b * v);
            }
        }
        Ok(coo.build())
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut acc = vec![0.0; other.n_cols];
        let mut mark = vec![usize::MAX; other.n_cols];
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            let start = col_idx.len();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        col_idx.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            col_idx[start..].sort_unstable();
            values.extend(col_idx[start..].iter().map(|&j| acc[j]));
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji| / max |a_ij|` (0 for the zero matrix).
    pub fn symmetry_deviation(&self) -> f64 {
        if self.n_rows != self.n_cols {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                dev = dev.max((v - self.get(j, i)).abs());
            }
        }
        dev / scale
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_deviation() <= rel_tol
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// MatrixMarket coordinate format (1-based indices).
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        let mut coo = CooBuilder::new(3, 3);
        coo.push(0, 0, 2.0);
        coo.push(2, 1, -1.0);
        coo.push(0, 2, 1.0);
        coo.push(0, 0, 1.0);
        coo.push(1, 1, 4.0);
        coo.build()
    }

    #[test]
    fn builder_sums_duplicates_and_sorts_columns() {
        let a = sample();
        assert_eq!(a.row_ptr(), &[0, 2, 3, 4]);
        assert_eq!(a.col_idx(), &[0, 2, 1, 1]);
        assert_eq!(a.values(), &[3.0, 1.0, 4.0, -1.0]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = sample();
        let x = [1.0, -2.0, 0.5];
        let dense = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(a.matvec(&x), dense.as_slice());
        assert_eq!(a.form(&x, &x), a.quad(&x));
    }

    #[test]
    fn transpose_and_symmetry() {
        let a = sample();
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
        assert!(!a.is_symmetric(1e-13));
        let s = a.lin_comb(1.0, &a.transpose(), 1.0).unwrap();
        assert_eq!(s.symmetry_deviation(), 0.0);
    }

    #[test]
    fn product_matches_dense() {
        let a = sample();
        let b = a.transpose().lin_comb(1.0, &CsrMatrix::identity(3), 2.0).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.to_dense(), a.to_dense() * b.to_dense());
        let parts = (c.row_ptr().to_vec(), c.col_idx().to_vec(), c.values().to_vec());
        assert!(CsrMatrix::try_from_parts(3, 3, parts.0, parts.1, parts.2).is_ok());
        assert!(a.matmul(&CsrMatrix::identity(2)).is_err());
    }

    #[test]
    fn parts_validation() {
        assert!(CsrMatrix::try_from_parts(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::try_from_parts(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::try_from_parts(2, 2, vec![0, 1, 3], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn matrix_market_output() {
        let mut buf = Vec::new();
        CsrMatrix::identity(2).write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1e0\n2 2 1e0\n"
        );
    }
}
