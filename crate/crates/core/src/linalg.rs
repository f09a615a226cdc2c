//! Small dense row-major matrices and the Householder LQ factorization.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pivots below `LQ_RANK_TOL * ||h||_F` mark a dependent row.
pub const LQ_RANK_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Panics on a dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "sub dimension mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &a| acc + a * a).sqrt()
    }

    /// Columns `start..end` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    /// Rows reordered so that output row `k` is input row `perm[k]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self::from_fn(perm.len(), self.cols, |i, j| self[(perm[i], j)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)] == T::zero()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// `h = L Q` for an `M x N` matrix with `M <= N`.
///
/// `L` is `M x M` lower triangular with a strictly positive diagonal and `Q` is `M x N` with
/// orthonormal rows. The sign convention makes the factorization unique.
pub fn lq<T: Real>(h: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let (m, n) = (h.rows(), h.cols());
    if m > n {
        return Err(Error::Config(format!("LQ needs rows <= cols, got {m}x{n}")));
    }
    let norm = h.frobenius();
    let tol = T::lit(LQ_RANK_TOL) * norm;
    let mut a = h.clone();
    // accumulates P_1 P_2 ... P_k; Q is the transpose of its first m columns
    let mut acc = Matrix::<T>::identity(n);
    let mut v = vec![T::zero(); n];

    for k in 0..m {
        let len = n - k;
        let mut xnorm = T::zero();
        for j in 0..len {
            v[j] = a[(k, k + j)];
            xnorm = xnorm + v[j] * v[j];
        }
        let xnorm = xnorm.sqrt();
        if !(xnorm > tol) {
            return Err(Error::Singular {
                row: k,
                pivot: xnorm.as_f64(),
            });
        }
        let beta = if v[0] >= T::zero() { -xnorm } else { xnorm };
        v[0] = v[0] - beta;
        let vnorm2 = v[..len].iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 > T::zero() {
            let two_over = T::lit(2.0) / vnorm2;
            for i in k..m {
                let d = (0..len).fold(T::zero(), |s, j| s + a[(i, k + j)] * v[j]) * two_over;
                for j in 0..len {
                    a[(i, k + j)] = a[(i, k + j)] - d * v[j];
                }
            }
            for i in 0..n {
                let d = (0..len).fold(T::zero(), |s, j| s + acc[(i, k + j)] * v[j]) * two_over;
                for j in 0..len {
                    acc[(i, k + j)] = acc[(i, k + j)] - d * v[j];
                }
            }
        }
    }

    let mut l = Matrix::from_fn(m, m, |i, j| if j <= i { a[(i, j)] } else { T::zero() });
    let mut q = Matrix::from_fn(m, n, |i, j| acc[(j, i)]);
    for k in 0..m {
        if l[(k, k)] < T::zero() {
            for i in k..m {
                l[(i, k)] = -l[(i, k)];
            }
            for j in 0..n {
                q[(k, j)] = -q[(k, j)];
            }
        }
    }
    Ok((l, q))
}
