//! Dense complex matrices and the unitary reductions built on them.
//!
//! Storage is column-major. Everything here is sequential on purpose: a
//! single decomposition must give bit-identical output regardless of how
//! many worker threads the caller has spawned around it.

mod hessenberg;
mod qr;
mod reorder;
mod rotation;

pub use hessenberg::hessenberg;
pub use qr::{schur_qr, QrConvergenceError};
pub use reorder::swap_adjacent;
pub use rotation::Givens;

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense column-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    /// Builds a matrix from row-major nested slices (convenient in tests).
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        let n = self.nrows;
        &mut self.data[j * n..(j + 1) * n]
    }

    /// Mutable views of two distinct columns.
    pub fn two_cols_mut(&mut self, a: usize, b: usize) -> (&mut [C64], &mut [C64]) {
        assert!(a < b && b < self.ncols);
        let n = self.nrows;
        let (lo, hi) = self.data.split_at_mut(b * n);
        (&mut lo[a * n..(a + 1) * n], &mut hi[..n])
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// First `r` columns.
    pub fn leading_columns(&self, r: usize) -> Self {
        assert!(r <= self.ncols);
        Self {
            nrows: self.nrows,
            ncols: r,
            data: self.data[..r * self.nrows].to_vec(),
        }
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions differ");
        let mut out = CMat::zeros(self.nrows, rhs.ncols);
        for j in 0..rhs.ncols {
            let dst = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for (l, &b) in rhs.col(j).iter().enumerate() {
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.col(l)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self† · rhs` without materialising the adjoint.
    pub fn adjoint_matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.nrows, rhs.nrows, "row dimensions differ");
        CMat::from_fn(self.ncols, rhs.ncols, |i, j| {
            self.col(i)
                .iter()
                .zip(rhs.col(j))
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus strictly below the diagonal.
    pub fn max_abs_below_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.ncols {
            for i in (j + 1)..self.nrows {
                worst = worst.max(self[(i, j)].norm());
            }
        }
        worst
    }

    /// `max |A†A − I|` for a square matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint_matmul(self);
        g.sub(&CMat::identity(g.nrows)).max_abs()
    }

    /// Largest singular value, from the eigenvalues of the Gram matrix `A†A`.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let gram = self.adjoint_matmul(self);
        let (mut h, _) = hessenberg(&gram, false);
        match schur_qr(&mut h, None, false) {
            Ok(()) => h.diagonal().iter().map(|z| z.re).fold(0.0, f64::max).sqrt(),
            // Frobenius norm is always an upper bound.
            Err(_) => self.frobenius_norm(),
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.ncols);
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        for (j, &x) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * x;
            }
        }
        out
    }

    /// `A[:, ..v.len()] · v`.
    pub fn mul_vec_prefix(&self, v: &[C64]) -> Vec<C64> {
        assert!(v.len() <= self.ncols);
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        for (j, &x) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * x;
            }
        }
        out
    }

    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.col(j).iter().zip(v).map(|(a, b)| a.conj() * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

/// `|re| + |im|`, the cheap modulus LAPACK uses for deflation tests.
#[inline]
pub(crate) fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}
