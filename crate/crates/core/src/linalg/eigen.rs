//! Cyclic Jacobi eigen-decomposition for small dense self-adjoint matrices.
//!
//! Complex Hermitian matrices are diagonalised through their real embedding,
//! whose spectrum is the Hermitian spectrum with every eigenvalue doubled.

use num_traits::{Float, One, Zero};
use crate::linalg::matrix::{Matrix, SelfAdjoint};
use crate::scalar::{dot, norm, Entry, Scalar};

/// Eigenvalues in ascending order with matching unit eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen<E: Entry> {
    pub values: Vec<E::Real>,
    pub vectors: Matrix<E>,
}

impl<E: Entry> Eigen<E> {
    pub fn vector(&self, k: usize) -> Vec<E> {
        self.vectors.col(k)
    }

    pub fn min_value(&self) -> E::Real {
        self.values.first().copied().unwrap_or_else(E::Real::zero)
    }

    pub fn max_abs_value(&self) -> E::Real {
        self.values
            .iter()
            .fold(E::Real::zero(), |m, v| m.max(Float::abs(*v)))
    }
}

const MAX_SWEEPS: usize = 100;

/// Jacobi iteration on a real symmetric matrix.
pub(crate) fn jacobi<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();
    let two = T::of(2.0);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let x = a[(i, j)] * a[(i, j)];
                total += x;
                if i != j {
                    off += x;
                }
            }
        }
        if off <= eps * eps * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (Float::abs(theta) + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

impl<E: Entry> SelfAdjoint<E> {
    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<E::Real> {
        let (vals, _) = jacobi(&E::realify(self.as_matrix()));
        vals.into_iter().step_by(E::EMBED).collect()
    }

    /// Full eigen-decomposition with orthonormal eigenvectors.
    pub fn eigen(&self) -> Eigen<E> {
        let n = self.dim();
        let (vals, vecs) = jacobi(&E::realify(self.as_matrix()));
        if E::EMBED == 1 {
            return Eigen {
                values: vals,
                vectors: E::unrealify(&vecs),
            };
        }
        // Each real eigenvector (u, v) of the embedding maps to the complex
        // eigenvector u + iv. Pairs span the same complex line, so keep the
        // first n that are independent over C after Gram-Schmidt.
        let mut values = Vec::with_capacity(n);
        let mut chosen: Vec<Vec<E>> = Vec::with_capacity(n);
        let half = E::Real::of(0.5);
        for k in 0..vals.len() {
            if chosen.len() == n {
                break;
            }
            let mut z = E::unrealify_vector(&vecs.col(k));
            for q in &chosen {
                let proj = dot(q, &z);
                for (zi, qi) in z.iter_mut().zip(q) {
                    *zi -= *qi * proj;
                }
            }
            let nz = norm(&z);
            if nz > half {
                let inv = E::Real::one() / nz;
                chosen.push(z.into_iter().map(|x| x.mul_real(inv)).collect());
                values.push(vals[k]);
            }
        }
        let vectors = Matrix::from_fn(n, n, |r, c| chosen[c][r]);
        Eigen { values, vectors }
    }

    /// Largest eigenvalue magnitude, the spectral norm.
    pub fn spectral_norm(&self) -> E::Real {
        self.eigenvalues()
            .into_iter()
            .fold(E::Real::zero(), |m, v| m.max(Float::abs(v)))
    }

    /// Smallest eigenvalue with a unit eigenvector.
    pub fn min_eigenpair(&self) -> (E::Real, Vec<E>) {
        let e = self.eigen();
        (e.values[0], e.vector(0))
    }

    /// Largest eigenvalue with a unit eigenvector.
    pub fn max_eigenpair(&self) -> (E::Real, Vec<E>) {
        let e = self.eigen();
        let k = e.values.len() - 1;
        (e.values[k], e.vector(k))
    }
}
