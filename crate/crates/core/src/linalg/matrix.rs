//! Dense row-major matrices over a real or complex [`Entry`].

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{Float, Zero};
use crate::error::{Error, Result};
use crate::scalar::{Entry, Scalar};

/// Dense `rows x cols` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Entry> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![E::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { E::one() } else { E::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix entries", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dim("matrix row length", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diagonal(d: &[E]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { E::zero() })
    }

    /// Column vector as an `n x 1` matrix.
    pub fn column(v: &[E]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `u v^*`.
    pub fn outer(u: &[E], v: &[E]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, s: E::Real) -> Self {
        self.map(|x| x.mul_real(s))
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::dim("matrix product", self.cols, rhs.rows));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == E::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[E]) -> Result<Vec<E>> {
        if self.cols != v.len() {
            return Err(Error::dim("matrix-vector product", self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect())
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "matrix sum", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, "matrix difference", |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, context: &'static str, f: impl Fn(E, E) -> E) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::dim(context, self.rows * self.cols, rhs.rows * rhs.cols));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> E::Real {
        self.data
            .iter()
            .map(|x| x.abs_sqr())
            .sum::<E::Real>()
            .sqrt()
    }

    pub fn max_abs(&self) -> E::Real {
        self.data
            .iter()
            .map(|x| x.modulus())
            .fold(E::Real::zero(), |m, x| m.max(x))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.finite())
    }

    /// Copies the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Converts entries to another scalar precision through `f64`.
    pub fn cast<F: Entry>(&self) -> Matrix<F> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|x| {
                    F::from_parts(F::Real::of(x.re().as_f64()), F::Real::of(x.im().as_f64()))
                        .unwrap_or_else(|| F::from_real(F::Real::of(x.re().as_f64())))
                })
                .collect(),
        }
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Panicking operators for internal code where shapes are already checked.
impl<E: Entry> Add for &Matrix<E> {
    type Output = Matrix<E>;

    fn add(self, rhs: Self) -> Matrix<E> {
        self.try_add(rhs).expect("matrix shapes agree")
    }
}

impl<E: Entry> Sub for &Matrix<E> {
    type Output = Matrix<E>;

    fn sub(self, rhs: Self) -> Matrix<E> {
        self.try_sub(rhs).expect("matrix shapes agree")
    }
}

impl<E: Entry> Mul for &Matrix<E> {
    type Output = Matrix<E>;

    fn mul(self, rhs: Self) -> Matrix<E> {
        self.matmul(rhs).expect("matrix shapes agree")
    }
}

impl<E: Entry> Neg for &Matrix<E> {
    type Output = Matrix<E>;

    fn neg(self) -> Matrix<E> {
        self.map(|x| -x)
    }
}

/// Square matrix equal to its own conjugate transpose.
///
/// Construction from an arbitrary square matrix replaces it by `(A + A^*)/2`,
/// so the invariant holds exactly: off-diagonal pairs are written once and
/// mirrored, and diagonal entries have zero imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjoint<E> {
    m: Matrix<E>,
}

pub type SymmetricMatrix<T> = SelfAdjoint<T>;
pub type HermitianMatrix<T> = SelfAdjoint<num_complex::Complex<T>>;

impl<E: Entry> SelfAdjoint<E> {
    pub fn new(a: Matrix<E>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("self-adjoint matrix (columns)", a.rows(), a.cols()));
        }
        Ok(Self::symmetrize(&a))
    }

    fn symmetrize(a: &Matrix<E>) -> Self {
        let n = a.rows();
        let half = E::Real::of(0.5);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::from_real(a[(i, i)].re());
            for j in (i + 1)..n {
                let v = (a[(i, j)] + a[(j, i)].conj()).mul_real(half);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        Self { m }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> E) -> Self {
        Self::symmetrize(&Matrix::from_fn(n, n, f))
    }

    pub fn from_rows(rows: &[Vec<E>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: Matrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: Matrix::identity(n) }
    }

    pub fn diagonal(d: &[E::Real]) -> Self {
        let d: Vec<E> = d.iter().map(|&x| E::from_real(x)).collect();
        Self { m: Matrix::diagonal(&d) }
    }

    /// `v v^*`.
    pub fn outer(v: &[E]) -> Self {
        Self::symmetrize(&Matrix::outer(v, v))
    }

    /// `S^* A S` for any `n x k` matrix `S`.
    pub fn congruence(&self, s: &Matrix<E>) -> Result<Self> {
        let left = s.adjoint().matmul(&self.m)?;
        Ok(Self::symmetrize(&left.matmul(s)?))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<E> {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix<E> {
        self.m
    }

    pub fn scale(&self, s: E::Real) -> Self {
        Self { m: self.m.scale(s) }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        Ok(Self::symmetrize(&self.m.try_add(&rhs.m)?))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        Ok(Self::symmetrize(&self.m.try_sub(&rhs.m)?))
    }

    /// `A + s I`.
    pub fn shift(&self, s: E::Real) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += E::from_real(s);
        }
        Self { m }
    }

    /// `v^* A v`, which is real.
    pub fn quadratic_form(&self, v: &[E]) -> E::Real {
        let av = self.m.mul_vec(v).expect("vector length matches matrix");
        crate::scalar::dot(v, &av).re()
    }

    pub fn trace(&self) -> E::Real {
        (0..self.dim()).map(|i| self.m[(i, i)].re()).sum()
    }

    pub fn frobenius_norm(&self) -> E::Real {
        self.m.frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite()
    }

    /// Principal block on rows and columns `k0..k0+k`.
    pub fn principal_block(&self, k0: usize, k: usize) -> Self {
        Self {
            m: self.m.block(k0, k0, k, k),
        }
    }

    pub fn cast<F: Entry>(&self) -> SelfAdjoint<F> {
        SelfAdjoint::symmetrize(&self.m.cast())
    }
}

impl<E: Entry> Index<(usize, usize)> for SelfAdjoint<E> {
    type Output = E;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &E {
        &self.m[idx]
    }
}

impl<E: Entry> Add for &SelfAdjoint<E> {
    type Output = SelfAdjoint<E>;

    fn add(self, rhs: Self) -> SelfAdjoint<E> {
        self.try_add(rhs).expect("matrix shapes agree")
    }
}

impl<E: Entry> Sub for &SelfAdjoint<E> {
    type Output = SelfAdjoint<E>;

    fn sub(self, rhs: Self) -> SelfAdjoint<E> {
        self.try_sub(rhs).expect("matrix shapes agree")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn construction_symmetrizes_exactly() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        let s = SelfAdjoint::new(a).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
    }

    #[test]
    fn hermitian_construction_has_real_diagonal() {
        let a = Matrix::from_rows(&[
            vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)],
        ])
        .unwrap();
        let h = SelfAdjoint::new(a).unwrap();
        assert_eq!(h[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        assert_eq!(h[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_non_square() {
        assert!(SelfAdjoint::new(Matrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn realify_round_trip_and_products() {
        let a = Matrix::from_rows(&[
            vec![Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5)],
            vec![Complex64::new(0.3, -0.7), Complex64::new(2.0, 1.0)],
        ])
        .unwrap();
        let b = Matrix::from_rows(&[
            vec![Complex64::new(0.2, 1.0)],
            vec![Complex64::new(-1.5, 0.1)],
        ])
        .unwrap();
        let ra = Complex64::realify(&a);
        assert_eq!(Complex64::unrealify(&ra), a);
        let lhs = Complex64::realify(&(&a * &b));
        let rhs = &ra * &Complex64::realify(&b);
        assert!((&lhs - &rhs).frobenius_norm() < 1e-14);
    }

    #[test]
    fn congruence_matches_explicit_product() {
        let a = SelfAdjoint::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let s = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let c = a.congruence(&s).unwrap();
        assert_eq!(c.dim(), 1);
        assert_eq!(c[(0, 0)], 2.0 + 4.0 + 12.0);
    }
}
