//! Small dense complex matrices.
//!
//! Every matrix in this crate is at most 4×4, so storage is a flat
//! row-major `Vec` and all kernels are the obvious triple loops.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Matrix product. Panics when inner dimensions disagree.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `selfᴴ · self`.
    pub fn gram(&self) -> Self {
        self.adjoint().matmul(self)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Drops one column.
    pub fn without_column(&self, col: usize) -> Self {
        assert!(col < self.cols);
        Self::from_fn(self.rows, self.cols - 1, |r, c| {
            self[(r, if c < col { c } else { c + 1 })]
        })
    }

    /// Largest |entry| off the main diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c {
                    m = m.max(self[(r, c)].norm());
                }
            }
        }
        m
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C64 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = ONE;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm().total_cmp(&a[j * n + k].norm()))
                .unwrap();
            if a[pivot * n + k] == ZERO {
                return ZERO;
            }
            if pivot != k {
                for c in 0..n {
                    a.swap(k * n + c, pivot * n + c);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                for c in k..n {
                    let v = a[k * n + c];
                    a[i * n + c] -= f * v;
                }
            }
        }
        det
    }

    /// Numerical rank: number of pivots above `tol` times the largest entry.
    pub fn rank(&self, tol: f64) -> usize {
        let (m, n) = self.shape();
        let scale = self.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let mut a = self.data.clone();
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let pivot = (rank..m)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .unwrap();
            if a[pivot * n + col].norm() <= tol * scale {
                continue;
            }
            for c in 0..n {
                a.swap(rank * n + c, pivot * n + c);
            }
            let p = a[rank * n + col];
            for i in rank + 1..m {
                let f = a[i * n + col] / p;
                for c in col..n {
                    let v = a[rank * n + c];
                    a[i * n + c] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:>+.4}{:+.4}j  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = CMatrix::from_rows(&[
            [c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0)],
            [c(-2.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)],
            [c(0.0, -1.0), c(2.0, 0.5), c(1.0, -3.0)],
        ]);
        let e = |r: usize, k: usize| m[(r, k)];
        let cofactor = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
            - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
        assert!((m.determinant() - cofactor).norm() < 1e-12);
    }

    #[test]
    fn rank_of_structurally_deficient_matrix() {
        let m = CMatrix::from_rows(&[
            [ZERO, c(1.0, 0.0), c(0.0, 1.0)],
            [ZERO, c(0.0, 1.0), c(-1.0, 0.0)],
            [ZERO, ZERO, ZERO],
        ]);
        assert_eq!(m.rank(1e-12), 1);
        assert_eq!(CMatrix::identity(4).rank(1e-12), 4);
        assert_eq!(CMatrix::zeros(3, 2).rank(1e-12), 0);
    }

    #[test]
    fn gram_is_hermitian() {
        let m = CMatrix::from_rows(&[[c(1.0, 2.0), c(3.0, -1.0)], [c(0.0, 1.0), c(2.0, 2.0)]]);
        let g = m.gram();
        assert!((g[(0, 1)] - g[(1, 0)].conj()).norm() < 1e-15);
        assert_eq!(g[(0, 0)].im, 0.0);
    }

    #[test]
    fn drop_column() {
        let m = CMatrix::from_fn(2, 4, |r, k| c((r * 4 + k) as f64, 0.0));
        let d = m.without_column(3);
        assert_eq!(d.shape(), (2, 3));
        assert_eq!(d[(1, 2)], c(6.0, 0.0));
    }
}
