//! Numeric traits the rest of the crate is generic over.
//!
//! [`Scalar`] is the real field (`f32` or `f64`). [`Entry`] is the entry type of
//! a matrix or jet: either a real scalar or a complex number over one. All of
//! the self-adjoint linear algebra is written once against [`Entry`]; complex
//! spectral work goes through the standard real embedding
//! `a + ib  ->  [[a, -b], [b, a]]`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;

/// Real floating point type used for values, tolerances and coordinates.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
    + Entry<Real = Self>
{
    /// Complex numbers over this field.
    type Cx: Entry<Real = Self>;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals with `f32`/`f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    type Cx = Complex<f32>;
}

impl Scalar for f64 {
    type Cx = Complex<f64>;
}

/// Whether a jet, matrix or subequation lives over the reals or over `C^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Real,
    Complex,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Real => "real",
            Flavor::Complex => "complex",
        }
    }
}

/// Matrix/jet entry: a real scalar or a complex number over one.
pub trait Entry:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Sum
{
    type Real: Scalar;

    const FLAVOR: Flavor;

    /// Real dimensions per entry: 1 for real, 2 for complex.
    const EMBED: usize;

    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn from_real(x: Self::Real) -> Self;

    /// Builds an entry from real and imaginary parts; `None` for a real entry
    /// with nonzero imaginary part.
    fn from_parts(re: Self::Real, im: Self::Real) -> Option<Self>;

    fn abs_sqr(self) -> Self::Real;

    fn mul_real(self, s: Self::Real) -> Self;

    fn finite(self) -> bool {
        Float::is_finite(self.re()) && Float::is_finite(self.im())
    }

    fn modulus(self) -> Self::Real {
        self.abs_sqr().sqrt()
    }

    /// Real representation of an `r x c` matrix (`r*EMBED x c*EMBED`).
    fn realify(m: &Matrix<Self>) -> Matrix<Self::Real>;

    /// Inverse of [`Entry::realify`] on matrices in its image.
    fn unrealify(m: &Matrix<Self::Real>) -> Matrix<Self>;

    /// `(Re v, Im v)` for complex, identity for real.
    fn realify_vector(v: &[Self]) -> Vec<Self::Real>;

    fn unrealify_vector(v: &[Self::Real]) -> Vec<Self>;
}

macro_rules! real_entry {
    ($t:ty) => {
        impl Entry for $t {
            type Real = $t;
            const FLAVOR: Flavor = Flavor::Real;
            const EMBED: usize = 1;

            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn from_real(x: $t) -> Self {
                x
            }
            fn from_parts(re: $t, im: $t) -> Option<Self> {
                (im == 0.0).then_some(re)
            }
            #[inline]
            fn abs_sqr(self) -> $t {
                self * self
            }
            #[inline]
            fn mul_real(self, s: $t) -> Self {
                self * s
            }
            fn realify(m: &Matrix<Self>) -> Matrix<$t> {
                m.clone()
            }
            fn unrealify(m: &Matrix<$t>) -> Matrix<Self> {
                m.clone()
            }
            fn realify_vector(v: &[Self]) -> Vec<$t> {
                v.to_vec()
            }
            fn unrealify_vector(v: &[$t]) -> Vec<Self> {
                v.to_vec()
            }
        }
    };
}

real_entry!(f32);
real_entry!(f64);

macro_rules! complex_entry {
    ($t:ty) => {
        impl Entry for Complex<$t> {
            type Real = $t;
            const FLAVOR: Flavor = Flavor::Complex;
            const EMBED: usize = 2;

            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn re(self) -> $t {
                self.re
            }
            #[inline]
            fn im(self) -> $t {
                self.im
            }
            #[inline]
            fn from_real(x: $t) -> Self {
                Complex::new(x, 0.0)
            }
            fn from_parts(re: $t, im: $t) -> Option<Self> {
                Some(Complex::new(re, im))
            }
            #[inline]
            fn abs_sqr(self) -> $t {
                self.norm_sqr()
            }
            #[inline]
            fn mul_real(self, s: $t) -> Self {
                self * s
            }
            fn realify(m: &Matrix<Self>) -> Matrix<$t> {
                let (r, c) = (m.rows(), m.cols());
                Matrix::from_fn(2 * r, 2 * c, |i, j| {
                    let z = m[(i % r, j % c)];
                    match (i < r, j < c) {
                        (true, true) | (false, false) => z.re,
                        (true, false) => -z.im,
                        (false, true) => z.im,
                    }
                })
            }
            fn unrealify(m: &Matrix<$t>) -> Matrix<Self> {
                let (r, c) = (m.rows() / 2, m.cols() / 2);
                Matrix::from_fn(r, c, |i, j| Complex::new(m[(i, j)], m[(i + r, j)]))
            }
            fn realify_vector(v: &[Self]) -> Vec<$t> {
                v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
            }
            fn unrealify_vector(v: &[$t]) -> Vec<Self> {
                let n = v.len() / 2;
                (0..n).map(|k| Complex::new(v[k], v[k + n])).collect()
            }
        }
    };
}

complex_entry!(f32);
complex_entry!(f64);

/// Euclidean norm of an entry vector.
pub fn norm<E: Entry>(v: &[E]) -> E::Real {
    v.iter().map(|x| x.abs_sqr()).sum::<E::Real>().sqrt()
}

/// `u^* v`.
pub fn dot<E: Entry>(u: &[E], v: &[E]) -> E {
    u.iter().zip(v).map(|(a, b)| a.conj() * *b).sum()
}

pub(crate) fn all_finite<E: Entry>(v: &[E]) -> bool {
    v.iter().all(|x| x.finite())
}
