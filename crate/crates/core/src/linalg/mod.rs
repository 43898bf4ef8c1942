//! Dense self-adjoint linear algebra: semidefiniteness at tolerance,
//! pseudo-inverses, complexification, the block criterion for positive
//! semidefiniteness and minimisation of quadratic functions.

mod eigen;
mod matrix;
mod tolerance;

pub use eigen::Eigen;
pub use matrix::{HermitianMatrix, Matrix, SelfAdjoint, SymmetricMatrix};
pub use tolerance::{ToleranceConfig, ToleranceProfile, TOLERANCE_PROFILE_ENV};

use serde::Serialize;

use num_traits::{Float, One, Zero};
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Entry, Scalar};

/// `lambda_min(A) + psd_tol * max(1, ||A||_2)`; nonnegative iff `A` is PSD at tolerance.
pub fn psd_margin<E: Entry>(a: &SelfAdjoint<E>, tol: &ToleranceConfig) -> E::Real {
    if a.dim() == 0 {
        return E::Real::zero();
    }
    let vals = a.eigenvalues();
    let lo = vals[0];
    let scale = vals.iter().fold(E::Real::one(), |m, v| m.max(Float::abs(*v)));
    lo + E::Real::of(tol.psd_tol) * scale
}

/// Whether `lambda_min(A) >= -psd_tol * max(1, ||A||_2)`.
pub fn is_psd<E: Entry>(a: &SelfAdjoint<E>, tol: &ToleranceConfig) -> bool {
    psd_margin(a, tol) >= E::Real::zero()
}

/// Moore-Penrose pseudo-inverse by spectral decomposition. Eigenvalues with
/// magnitude at most `rank_tol * max|lambda|` are treated as zero.
pub fn pseudo_inverse<E: Entry>(a: &SelfAdjoint<E>, tol: &ToleranceConfig) -> SelfAdjoint<E> {
    let n = a.dim();
    let e = a.eigen();
    let top = e.max_abs_value();
    let mut out = Matrix::<E>::zeros(n, n);
    if top == E::Real::zero() {
        return SelfAdjoint::new(out).expect("square");
    }
    let cutoff = E::Real::of(tol.rank_tol) * top;
    for (k, &lam) in e.values.iter().enumerate() {
        if Float::abs(lam) <= cutoff {
            continue;
        }
        let v = e.vector(k);
        let inv = E::Real::one() / lam;
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += (v[i] * v[j].conj()).mul_real(inv);
            }
        }
    }
    SelfAdjoint::new(out).expect("square")
}

/// Complex-linear part of a real symmetric `2n x 2n` matrix.
///
/// Coordinates are ordered `(x_1..x_n, y_1..y_n)` with `z = x + iy`, so the
/// complex structure is `J = [[0, -I], [I, 0]]`. Writing `A = [[a, c], [b, d]]`,
/// the matrix `(A - JAJ)/2` equals `[[h, -k], [k, h]]` with `h = (a + d)/2` and
/// `k = (b - c)/2`, and the returned Hermitian matrix is `h + ik`.
pub fn complexify<T: Scalar>(a: &SymmetricMatrix<T>) -> Result<SelfAdjoint<T::Cx>> {
    let dim = a.dim();
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let n = dim / 2;
    let half = T::of(0.5);
    let m = a.as_matrix();
    let out = Matrix::from_fn(n, n, |i, j| {
        let h = (m[(i, j)] + m[(i + n, j + n)]) * half;
        let k = (m[(i + n, j)] - m[(i, j + n)]) * half;
        T::Cx::from_parts(h, k).expect("complex entry")
    });
    SelfAdjoint::new(out)
}

/// `[[B, C], [C^*, D]]`.
pub fn assemble_blocks<E: Entry>(
    b: &SelfAdjoint<E>,
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
) -> Result<SelfAdjoint<E>> {
    let (n, m) = (b.dim(), d.dim());
    check_blocks(b, c, d)?;
    let mut a = Matrix::zeros(n + m, n + m);
    a.set_block(0, 0, b.as_matrix());
    a.set_block(0, n, c);
    a.set_block(n, 0, &c.adjoint());
    a.set_block(n, n, d.as_matrix());
    SelfAdjoint::new(a)
}

/// Splits an `(n+m)`-dimensional self-adjoint matrix into `(B, C, D)`.
pub fn split_blocks<E: Entry>(
    a: &SelfAdjoint<E>,
    n: usize,
) -> Result<(SelfAdjoint<E>, Matrix<E>, SelfAdjoint<E>)> {
    let total = a.dim();
    if n > total {
        return Err(Error::dim("block split", total, n));
    }
    let m = total - n;
    Ok((
        a.principal_block(0, n),
        a.as_matrix().block(0, n, n, m),
        a.principal_block(n, m),
    ))
}

fn check_blocks<E: Entry>(b: &SelfAdjoint<E>, c: &Matrix<E>, d: &SelfAdjoint<E>) -> Result<()> {
    if c.rows() != b.dim() {
        return Err(Error::dim("off-diagonal block rows", b.dim(), c.rows()));
    }
    if c.cols() != d.dim() {
        return Err(Error::dim("off-diagonal block columns", d.dim(), c.cols()));
    }
    Ok(())
}

/// The three conditions of the block criterion, with the numbers behind them.
#[derive(Clone, Debug, Serialize)]
pub struct SchurConditions {
    /// `D` is PSD at tolerance.
    pub d_psd: bool,
    /// `||(I - D D^+) C^*||_F`.
    pub range_residual: f64,
    /// Range residual is within `residual_tol * max(1, ||C||_F)`.
    pub range_ok: bool,
    /// PSD margin of the Schur complement `B - C D^+ C^*`.
    pub schur_margin: f64,
    pub schur_psd: bool,
}

impl SchurConditions {
    pub fn holds(&self) -> bool {
        self.d_psd && self.range_ok && self.schur_psd
    }
}

/// Intermediate matrices of the block criterion, shared with witness construction.
pub(crate) struct SchurParts<E: Entry> {
    /// `(I - D D^+) C^*`, an `m x n` matrix.
    pub range_defect: Matrix<E>,
    pub schur: SelfAdjoint<E>,
}

pub(crate) fn schur_parts<E: Entry>(
    b: &SelfAdjoint<E>,
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    tol: &ToleranceConfig,
) -> Result<SchurParts<E>> {
    check_blocks(b, c, d)?;
    let d_pinv = pseudo_inverse(d, tol);
    let c_adj = c.adjoint();
    let proj = d.as_matrix() * d_pinv.as_matrix();
    let range_defect = &c_adj - &(&proj * &c_adj);
    let schur = b.try_sub(&d_pinv.congruence(&c_adj)?)?;
    Ok(SchurParts {
        range_defect,
        schur,
    })
}

/// Evaluates the block criterion: `D >= 0`, `(I - D D^+) C^* = 0` and
/// `B - C D^+ C^* >= 0`.
pub fn schur_conditions<E: Entry>(
    b: &SelfAdjoint<E>,
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    tol: &ToleranceConfig,
) -> Result<SchurConditions> {
    let parts = schur_parts(b, c, d, tol)?;
    let d_psd = is_psd(d, tol);
    let range_residual = parts.range_defect.frobenius_norm();
    let range_ok = range_residual
        <= E::Real::of(tol.residual_tol) * E::Real::one().max(c.frobenius_norm());
    let schur_margin = psd_margin(&parts.schur, tol);
    Ok(SchurConditions {
        d_psd,
        range_residual: range_residual.as_f64(),
        range_ok,
        schur_margin: schur_margin.as_f64(),
        schur_psd: schur_margin >= E::Real::zero(),
    })
}

/// Whether `[[B, C], [C^*, D]]` is PSD, decided through the block criterion.
pub fn block_psd<E: Entry>(
    b: &SelfAdjoint<E>,
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    tol: &ToleranceConfig,
) -> Result<bool> {
    Ok(schur_conditions(b, c, d, tol)?.holds())
}

/// Outcome of minimising `q(x) = 2 Re(x^* b) + x^* P x`.
#[derive(Clone, Debug, PartialEq)]
pub enum QuadMinResult<E: Entry> {
    BoundedBelow { min_value: E::Real, argmin: Vec<E> },
    /// `q(t * direction) -> -inf` as `t -> +inf`.
    Unbounded { direction: Vec<E> },
}

impl<E: Entry> QuadMinResult<E> {
    pub fn is_bounded(&self) -> bool {
        matches!(self, QuadMinResult::BoundedBelow { .. })
    }
}

/// `2 Re(x^* b) + x^* P x`.
pub fn quadratic_value<E: Entry>(p: &SelfAdjoint<E>, b: &[E], x: &[E]) -> E::Real {
    E::Real::of(2.0) * dot(x, b).re() + p.quadratic_form(x)
}

/// Minimises `2 Re(x^* b) + x^* P x`. It is bounded below iff `P >= 0` and `b`
/// lies in the range of `P`, in which case the minimum is `-b^* P^+ b` at
/// `-P^+ b`.
pub fn quadratic_min<E: Entry>(
    p: &SelfAdjoint<E>,
    b: &[E],
    tol: &ToleranceConfig,
) -> Result<QuadMinResult<E>> {
    if b.len() != p.dim() {
        return Err(Error::dim("linear term", p.dim(), b.len()));
    }
    let e = p.eigen();
    let scale = e.max_abs_value().max(E::Real::one());
    if !e.values.is_empty() && e.values[0] < -E::Real::of(tol.psd_tol) * scale {
        let v = e.vector(0);
        let direction = if dot(&v, b).re() <= E::Real::zero() {
            v
        } else {
            v.into_iter().map(|x| -x).collect()
        };
        return Ok(QuadMinResult::Unbounded { direction });
    }
    let pinv = pseudo_inverse(p, tol);
    let pb = pinv.as_matrix().mul_vec(b)?;
    let ppb = p.as_matrix().mul_vec(&pb)?;
    let defect: Vec<E> = b.iter().zip(&ppb).map(|(&x, &y)| x - y).collect();
    let limit = E::Real::of(tol.residual_tol) * E::Real::one().max(norm(b));
    if norm(&defect) > limit {
        return Ok(QuadMinResult::Unbounded {
            direction: defect.into_iter().map(|x| -x).collect(),
        });
    }
    let min_value = -dot(b, &pb).re();
    Ok(QuadMinResult::BoundedBelow {
        min_value,
        argmin: pb.into_iter().map(|x| -x).collect(),
    })
}

/// `Q(G) = C G + G^* C^* + G^* D G` for `C` of size `n x m` and `G` of size `m x n`.
pub fn gamma_form<E: Entry>(
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    gamma: &Matrix<E>,
) -> Result<SelfAdjoint<E>> {
    if gamma.rows() != d.dim() || c.cols() != d.dim() {
        return Err(Error::dim("linear map rows", d.dim(), gamma.rows()));
    }
    if gamma.cols() != c.rows() {
        return Err(Error::dim("linear map columns", c.rows(), gamma.cols()));
    }
    let cg = c.matmul(gamma)?;
    let sum = &(&cg + &cg.adjoint()) + d.congruence(gamma)?.as_matrix();
    SelfAdjoint::new(sum)
}

/// Sharp lower bound `-C D^+ C^*` for `Q(G)` over all maps `G`, valid when
/// `D >= 0` and the columns of `C^*` lie in the range of `D`.
pub fn gamma_lower_bound<E: Entry>(
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    tol: &ToleranceConfig,
) -> Result<SelfAdjoint<E>> {
    let n = c.rows();
    let zero = SelfAdjoint::zeros(n);
    let parts = schur_parts(&zero, c, d, tol)?;
    if !is_psd(d, tol) {
        return Err(Error::Precondition(
            "the D block is not positive semidefinite".into(),
        ));
    }
    let residual = parts.range_defect.frobenius_norm();
    if residual > E::Real::of(tol.residual_tol) * E::Real::one().max(c.frobenius_norm()) {
        return Err(Error::Precondition(format!(
            "C^* is not in the range of D (residual {})",
            residual.as_f64()
        )));
    }
    Ok(parts.schur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix<f64> {
        SelfAdjoint::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn psd_examples() {
        assert!(is_psd(&SelfAdjoint::<f64>::identity(3), &tol()));
        assert!(is_psd(&SelfAdjoint::<f64>::diagonal(&[1.0, 0.0]), &tol()));
        assert!(!is_psd(&SelfAdjoint::<f64>::diagonal(&[1.0, -1e-3]), &tol()));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = pseudo_inverse(&SelfAdjoint::<f64>::diagonal(&[2.0, 0.0]), &tol());
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
        let i = pseudo_inverse(&SelfAdjoint::<f64>::identity(4), &tol());
        assert!((&i - &SelfAdjoint::identity(4)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn rank_one_pseudo_inverse() {
        let v = [1.0f64, -2.0, 0.5];
        let a = SelfAdjoint::outer(&v);
        let p = pseudo_inverse(&a, &tol());
        let n4 = norm(&v).powi(4);
        let expected = SelfAdjoint::outer(&v).scale(1.0 / n4);
        assert!((&p - &expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn complexify_examples() {
        let c = complexify(&SelfAdjoint::<f64>::diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(c[(0, 0)], Complex64::new(3.0, 0.0));

        // a + ib with a symmetric and b antisymmetric embeds as [[a, -b], [b, a]].
        let a = sym(&[
            &[1.0, 0.5, 0.0, -0.3],
            &[0.5, 2.0, 0.3, 0.0],
            &[0.0, 0.3, 1.0, 0.5],
            &[-0.3, 0.0, 0.5, 2.0],
        ]);
        let c = complexify(&a).unwrap();
        assert_eq!(c[(0, 1)], Complex64::new(0.5, 0.3));
        assert_eq!(c[(1, 0)], Complex64::new(0.5, -0.3));

        let j = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let c = complexify(&SelfAdjoint::new(j).unwrap()).unwrap();
        assert_eq!(c[(0, 0)], Complex64::new(0.0, 0.0));

        assert!(matches!(
            complexify(&SelfAdjoint::<f64>::identity(3)),
            Err(Error::OddDimension(3))
        ));
    }

    #[test]
    fn block_examples() {
        let one = SelfAdjoint::<f64>::identity(1);
        let c1 = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let c0 = Matrix::zeros(1, 1);
        assert!(block_psd(&one, &c0, &one, &tol()).unwrap());
        let conds = schur_conditions(&one, &c1, &SelfAdjoint::zeros(1), &tol()).unwrap();
        assert!(conds.d_psd);
        assert!(!conds.range_ok);
        assert!(!conds.holds());
        assert!(block_psd(&one, &Matrix::zeros(2, 1), &one, &tol()).is_err());
    }

    #[test]
    fn quadratic_min_examples() {
        let p = SelfAdjoint::<f64>::diagonal(&[1.0, 0.0]);
        match quadratic_min(&p, &[1.0, 0.0], &tol()).unwrap() {
            QuadMinResult::BoundedBelow { min_value, argmin } => {
                assert!((min_value + 1.0).abs() < 1e-14);
                assert!((argmin[0] + 1.0).abs() < 1e-14 && argmin[1] == 0.0);
            }
            other => panic!("expected bounded, got {other:?}"),
        }
        match quadratic_min(&p, &[0.0, 1.0], &tol()).unwrap() {
            QuadMinResult::Unbounded { direction } => {
                assert!(direction[0].abs() < 1e-14 && (direction[1] + 1.0).abs() < 1e-14);
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
        let z = SelfAdjoint::<f64>::zeros(2);
        assert_eq!(
            quadratic_min(&z, &[0.0, 0.0], &tol()).unwrap(),
            QuadMinResult::BoundedBelow {
                min_value: -0.0,
                argmin: vec![-0.0, -0.0]
            }
        );
    }

    #[test]
    fn indefinite_quadratic_direction_decreases() {
        let p = SelfAdjoint::<f64>::diagonal(&[1.0, -2.0]);
        let b = [0.3, 0.7];
        let QuadMinResult::Unbounded { direction } = quadratic_min(&p, &b, &tol()).unwrap() else {
            panic!("indefinite form is unbounded");
        };
        let mut last = 0.0;
        for t in [1.0, 10.0, 100.0] {
            let x: Vec<f64> = direction.iter().map(|d| d * t).collect();
            let q = quadratic_value(&p, &b, &x);
            assert!(q < last);
            last = q;
        }
    }

    #[test]
    fn gamma_bound_examples() {
        let d = SelfAdjoint::<f64>::diagonal(&[2.0]);
        let c = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let lb = gamma_lower_bound(&c, &d, &tol()).unwrap();
        assert!((lb[(0, 0)] + 0.5).abs() < 1e-15);
        for k in -40..=40 {
            let g = Matrix::from_rows(&[vec![k as f64 * 0.05]]).unwrap();
            let q = gamma_form(&c, &d, &g).unwrap();
            assert!(q[(0, 0)] >= -0.5 - 1e-15);
        }
        let zero = gamma_lower_bound(&Matrix::zeros(2, 1), &d, &tol()).unwrap();
        assert_eq!(zero.frobenius_norm(), 0.0);
        assert!(gamma_lower_bound(&c, &SelfAdjoint::zeros(1), &tol()).is_err());
        assert!(gamma_lower_bound(&c, &SelfAdjoint::diagonal(&[-1.0]), &tol()).is_err());
    }
}
