//! Compressed sparse row matrices with real entries.
//!
//! Only what the quasi-Helmholtz maps and graph Laplacians need: assembly from
//! triplets, products with real or complex vectors, transposition, sparse
//! products, column selection, and Matrix Market output.

use std::fmt::Write as _;
use std::ops::{Add, Mul};

use faer::Mat;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Scalars that a real sparse matrix can act on.
pub trait Scalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros produced by cancellation are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
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

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// `y = A x`
    pub fn mul_vec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::default(); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.ncols, "sparse matvec: input length");
        assert_eq!(y.len(), self.nrows, "sparse matvec: output length");
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::default();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + x[self.col_idx[k]] * self.values[k];
            }
            *out = acc;
        }
    }

    /// `y = Aᵀ x`
    pub fn mul_transpose_vec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows, "sparse transpose matvec: input length");
        let mut y = vec![T::default(); self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                y[c] = y[c] + xr * self.values[k];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect(),
        )
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, other.nrows, "sparse product: inner dimension");
        let mut trips = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if acc[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trips.push((r, c, acc[c]));
                acc[c] = 0.0;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, trips)
    }

    /// `AᵀA`
    pub fn gram(&self) -> Self {
        self.transpose().matmul(self)
    }

    /// Keep the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            map[old] = new;
        }
        let trips = self
            .triplets()
            .into_iter()
            .filter(|&(_, c, _)| map[c] != usize::MAX)
            .map(|(r, c, v)| (r, map[c], v))
            .collect();
        Self::from_triplets(self.nrows, cols.len(), trips)
    }

    /// Keep the listed rows and columns of a square matrix.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let trips = self
            .triplets()
            .into_iter()
            .filter(|&(r, c, _)| map[r] != usize::MAX && map[c] != usize::MAX)
            .map(|(r, c, v)| (map[r], map[c], v))
            .collect();
        Self::from_triplets(keep.len(), keep.len(), trips)
    }

    /// `alpha A + beta B` for same-shaped matrices.
    pub fn linear_combination(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut trips: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, alpha * v)).collect();
        trips.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, beta * v)));
        Self::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Largest absolute row sum (the infinity norm).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Matrix Market coordinate format (`real general`, 1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "%%MatrixMarket matrix coordinate real general");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v);
        }
        s
    }

    pub fn to_faer_csc(&self) -> faer::sparse::SparseColMat<usize, f64> {
        let trips: Vec<_> = self
            .triplets()
            .into_iter()
            .map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .expect("valid sparse structure")
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct SparseCholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for SparseCholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseCholesky").field("n", &self.n).finish()
    }
}

impl SparseCholesky {
    pub fn new(a: &CsrMatrix) -> crate::Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(crate::Error::DimensionMismatch(format!(
                "Cholesky of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let llt = a
            .to_faer_csc()
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| crate::Error::Linalg(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Self { n: a.nrows(), llt })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solve for a complex right-hand side (real and imaginary parts together).
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        use faer::linalg::solvers::Solve;
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::from_fn(self.n, 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
        self.llt.solve_in_place(&mut rhs);
        (0..self.n).map(|i| Complex64::new(rhs[(i, 0)], rhs[(i, 1)])).collect()
    }
}

/// Parse a Matrix Market coordinate file written by [`CsrMatrix::to_matrix_market`].
pub fn parse_matrix_market(text: &str) -> Option<CsrMatrix> {
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let mut head = lines.next()?.split_whitespace();
    let nrows = head.next()?.parse().ok()?;
    let ncols = head.next()?.parse().ok()?;
    let nnz: usize = head.next()?.parse().ok()?;
    let mut trips = Vec::with_capacity(nnz);
    for l in lines.take(nnz) {
        let mut it = l.split_whitespace();
        let r: usize = it.next()?.parse().ok()?;
        let c: usize = it.next()?.parse().ok()?;
        let v: f64 = it.next()?.parse().ok()?;
        trips.push((r - 1, c - 1, v));
    }
    Some(CsrMatrix::from_triplets(nrows, ncols, trips))
}
