//! Seeded random generation of vectors, matrices and jets.
//!
//! All randomness in the crate flows from a `u64` seed through ChaCha, and
//! per-item streams are derived with [`substream`] so parallel sweeps produce
//! the same values regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use num_traits::One;
use crate::jets::Jet;
use crate::linalg::{Matrix, SelfAdjoint};
use crate::scalar::{Entry, Scalar};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for item `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> SeededRng {
    // splitmix64 finaliser so nearby indices give unrelated seeds
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    rng(z ^ (z >> 31))
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn entry<E: Entry, R: Rng + ?Sized>(rng: &mut R) -> E {
    let re = E::Real::of(normal(rng));
    if E::EMBED == 1 {
        E::from_real(re)
    } else {
        E::from_parts(re, E::Real::of(normal(rng))).expect("complex entry")
    }
}

pub fn vector<E: Entry, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<E> {
    (0..n).map(|_| entry(rng)).collect()
}

/// Uniformly distributed unit vector.
pub fn unit_vector<E: Entry, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<E> {
    loop {
        let v: Vec<E> = vector(rng, n);
        let nv = crate::scalar::norm(&v);
        if nv > E::Real::of(1e-12) {
            let inv = E::Real::one() / nv;
            return v.into_iter().map(|x| x.mul_real(inv)).collect();
        }
    }
}

pub fn matrix<E: Entry, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<E> {
    Matrix::from_fn(rows, cols, |_, _| entry(rng))
}

/// `(G + G^*)/2` for Gaussian `G`.
pub fn self_adjoint<E: Entry, R: Rng + ?Sized>(rng: &mut R, n: usize) -> SelfAdjoint<E> {
    SelfAdjoint::new(matrix(rng, n, n)).expect("square")
}

/// `G G^*` with `G` of size `n x rank`; singular when `rank < n`.
pub fn psd<E: Entry, R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> SelfAdjoint<E> {
    let g: Matrix<E> = matrix(rng, n, rank);
    SelfAdjoint::new(&g * &g.adjoint()).expect("square")
}

/// Jet with Gaussian value, gradient and self-adjoint Hessian.
pub fn jet<E: Entry, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Jet<E> {
    Jet::new(E::Real::of(normal(rng)), vector(rng, n), self_adjoint(rng, n))
        .expect("finite random jet")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: f64 = normal(&mut substream(7, 3));
        let b: f64 = normal(&mut substream(7, 3));
        let c: f64 = normal(&mut substream(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn complex_entries_have_imaginary_parts() {
        let v: Vec<C64> = vector(&mut rng(1), 8);
        assert!(v.iter().any(|z| z.im != 0.0));
        let u: Vec<C64> = unit_vector(&mut rng(2), 3);
        assert!((crate::scalar::norm(&u) - 1.0).abs() < 1e-14);
    }
}
