//! Small dense linear algebra: row-major matrices, products, LU solves and
//! the top eigenpair of a symmetric nonnegative matrix.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::numeric;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self ← self + s·other`.
    pub fn add_scaled(&mut self, s: f64, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Multiplies row `i` by `s[i]`.
    pub fn scale_rows(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.rows);
        for i in 0..self.rows {
            let f = s[i];
            for v in self.row_mut(i) {
                *v *= f;
            }
        }
    }

    /// Multiplies column `j` by `s[j]`.
    pub fn scale_cols(&mut self, s: &[f64]) {
        assert_eq!(s.len(), self.cols);
        for i in 0..self.rows {
            for (v, f) in self.row_mut(i).iter_mut().zip(s) {
                *v *= f;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm_acc(1.0, self, other, 0.0, &mut out);
        out
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `c ← alpha·a·b + beta·c`.
pub fn gemm_acc(alpha: f64, a: &Matrix, b: &Matrix, beta: f64, c: &mut Matrix) {
    assert_eq!(a.cols, b.rows, "inner dimensions");
    assert_eq!((c.rows, c.cols), (a.rows, b.cols), "output shape");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the strides describe the row-major buffers owned by a, b and c,
    // whose lengths were checked against their shapes at construction.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            n as isize,
            1,
            beta,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    piv: Vec<usize>,
}

impl Lu {
    pub fn new(mut a: Matrix) -> Result<Self> {
        let n = a.rows;
        if n != a.cols {
            return Err(numeric!("LU needs a square matrix"));
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                if a[(i, k)].abs() > best {
                    best = a[(i, k)].abs();
                    p = i;
                }
            }
            if best <= 1e-14 * scale {
                return Err(numeric!("singular matrix in LU at column {k}"));
            }
            if p != k {
                piv.swap(p, k);
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f != 0.0 {
                    let (top, bottom) = a.data.split_at_mut(i * n);
                    let rk = &top[k * n + k + 1..k * n + n];
                    let ri = &mut bottom[k + 1..n];
                    for (x, y) in ri.iter_mut().zip(rk) {
                        *x -= f * y;
                    }
                }
            }
        }
        Ok(Self { lu: a, piv })
    }

    /// Solves `A X = B` in place for every column of `b`.
    pub fn solve_matrix(&self, b: &mut Matrix) {
        let n = self.lu.rows;
        assert_eq!(b.rows, n);
        let m = b.cols;
        let mut permuted = Matrix::zeros(n, m);
        for i in 0..n {
            permuted.row_mut(i).copy_from_slice(b.row(self.piv[i]));
        }
        // forward substitution with unit lower factor
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    let (top, bottom) = permuted.data.split_at_mut(i * m);
                    for (x, y) in bottom[..m].iter_mut().zip(&top[k * m..k * m + m]) {
                        *x -= f * y;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[(i, k)];
                if f != 0.0 {
                    let (top, bottom) = permuted.data.split_at_mut(k * m);
                    for (x, y) in top[i * m..i * m + m].iter_mut().zip(&bottom[..m]) {
                        *x -= f * y;
                    }
                }
            }
            let d = 1.0 / self.lu[(i, i)];
            for x in permuted.row_mut(i) {
                *x *= d;
            }
        }
        *b = permuted;
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut m = Matrix::from_vec(b.len(), 1, b.to_vec());
        self.solve_matrix(&mut m);
        m.into_vec()
    }
}

/// Largest eigenvalue and eigenvector of a symmetric nonnegative matrix by
/// power iteration, stopping when the Rayleigh quotient moves by less than
/// `tol` (absolute). The eigenvector has unit Euclidean norm and a positive
/// sum.
pub fn power_iteration(a: &Matrix, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>)> {
    let n = a.rows;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut mu = 0.0;
    for it in 0..max_iter {
        let w = a.matvec(&v);
        let rq: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok((0.0, v));
        }
        let sign = if w.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        v = w.iter().map(|x| sign * x / norm).collect();
        if it > 0 && (rq - mu).abs() < tol {
            return Ok((rq, v));
        }
        mu = rq;
    }
    Err(numeric!("power iteration did not converge in {max_iter} steps (last estimate {mu})"))
}
