//! Small dense linear algebra: a row-major matrix, Cholesky factorization,
//! Householder least squares and pivoted Gaussian elimination.
//!
//! Sizes here are a few hundred rows at most (kriging designs of
//! experiments), so straightforward O(n^3) kernels are adequate.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{input, Result};

/// Row-major dense matrix. Rows are sample points throughout the crate.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// An empty matrix with `cols` columns, to be grown with [`Matrix::push_row`].
    pub fn with_cols(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(input("matrix data length does not match its shape"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::with_cols(cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(input("ragged rows"));
            }
            m.push_row(r.as_ref());
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// Appends a row; panics if its length differs from the column count.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut m = Self::with_cols(self.cols);
        for &i in idx {
            m.push_row(self.row(i));
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product accumulated in twice the working precision (error-free
/// products by Dekker splitting, compensated sums).
pub fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    const SPLIT: f64 = 134_217_729.0;
    let split = |v: f64| {
        let c = SPLIT * v;
        let hi = c - (c - v);
        (hi, v - hi)
    };
    let (mut sum, mut comp) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let ((xh, xl), (yh, yl)) = (split(x), split(y));
        let e = xl * yl - (((p - xh * yh) - xl * yh) - xh * yl);
        let t = sum + p;
        let z = t - sum;
        comp += (sum - (t - z)) + (p - z) + e;
        sum = t;
    }
    sum + comp
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    /// Returns `None` when a pivot is not strictly positive.
    pub fn factor(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = &l.row(j)[..j];
            let s = a[(j, j)] - dot(lj, lj);
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let d = s.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let v = (a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j])) / d;
                l[(i, j)] = v;
            }
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor_matrix(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.l.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `L^T x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let row = self.l.row(i);
            b[i] /= row[i];
            let xi = b[i];
            for (bk, &lik) in b[..i].iter_mut().zip(&row[..i]) {
                *bk -= lik * xi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// Natural log of `det A`.
    pub fn ln_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }

    /// `A^{-1}`, assembled column by column.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.solve_lower_in_place(&mut e);
            self.solve_upper_in_place(&mut e);
            for i in 0..n {
                inv[(i, j)] = e[i];
            }
        }
        inv
    }
}

/// Householder least-squares solution of `A x ≈ b` for a tall `A` (m × p).
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    /// Upper-triangular `R` (p × p) with `A^T A = R^T R`.
    pub r: Matrix,
}

/// Returns `None` when `A` is numerically rank deficient.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Option<LeastSquares> {
    let (m, p) = (a.rows(), a.cols());
    if m < p {
        return None;
    }
    let mut qa = a.clone();
    let mut qb = b.to_vec();
    let scale = (0..p)
        .map(|j| norm(&a.column(j)))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for k in 0..p {
        let mut alpha = (k..m).map(|i| qa[(i, k)] * qa[(i, k)]).sum::<f64>().sqrt();
        if alpha <= 1e-12 * scale {
            return None;
        }
        if qa[(k, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v: Vec<f64> = (k..m).map(|i| qa[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for j in k..p {
                let s = (k..m).map(|i| v[i - k] * qa[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    qa[(i, j)] -= s * v[i - k];
                }
            }
            let s = (k..m).map(|i| v[i - k] * qb[i]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                qb[i] -= s * v[i - k];
            }
        }
    }
    let mut r = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            r[(i, j)] = qa[(i, j)];
        }
    }
    let mut x = qb[..p].to_vec();
    solve_upper_triangular(&r, &mut x);
    Some(LeastSquares { solution: x, r })
}

/// Solves `R x = b` in place for upper-triangular `R`.
pub fn solve_upper_triangular(r: &Matrix, b: &mut [f64]) {
    let n = r.rows();
    for i in (0..n).rev() {
        let s = b[i] - (i + 1..n).map(|j| r[(i, j)] * b[j]).sum::<f64>();
        b[i] = s / r[(i, i)];
    }
}

/// Solves `R^T x = b` in place for upper-triangular `R`.
pub fn solve_upper_transpose(r: &Matrix, b: &mut [f64]) {
    let n = r.rows();
    for i in 0..n {
        let s = b[i] - (0..i).map(|j| r[(j, i)] * b[j]).sum::<f64>();
        b[i] = s / r[(i, i)];
    }
}

/// Gaussian elimination with partial pivoting. `None` if singular.
pub fn solve_dense(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.rows();
    let scale = a.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))?;
        if a[(piv, k)].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(piv, j)];
                a[(piv, j)] = t;
            }
            b.swap(k, piv);
        }
        for i in k + 1..n {
            let f = a[(i, k)] / a[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[(i, j)] -= f * a[(k, j)];
            }
            b[i] -= f * b[k];
        }
    }
    solve_upper_triangular(&a, &mut b);
    Some(b)
}
