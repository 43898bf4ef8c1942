//! Numerical toolkit for second-order jets and subequations.
//!
//! The crate decides membership of real and complex 2-jets in cone-like
//! families of jet space, including product families `F#G` where a jet on a
//! product space must pull back into `F` along every graph map and into `G`
//! along the vertical inclusion. On top of the exact decisions it provides
//! sampled fields with finite-difference jets, the sup-convolution and
//! mollification regularisers, and a harness that checks the minimum
//! principle for marginal functions `g(x) = inf_y f(x, y)`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`) and, where
//! both flavours make sense, over [`Entry`] (real or complex). Type aliases at
//! the crate root fix the common double-precision instantiations.


pub mod catalog;
pub mod error;
pub mod field;

pub mod jets;
pub mod linalg;
pub mod marginal;

pub mod product;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod subequation;

pub use error::{Error, Result};
pub use jets::{AnyJet, Jet};
pub use linalg::{
    block_psd, complexify, gamma_form, gamma_lower_bound, is_psd, pseudo_inverse, quadratic_min,
    Matrix, QuadMinResult, SelfAdjoint, ToleranceConfig,
};
pub use product::{ProductDecision, ProductSpec, Witness};
pub use report::{Outcome, VerificationReport};
pub use scalar::{Entry, Flavor, Scalar};
pub use subequation::{Flags, Subequation};

pub use num_complex::Complex;

/// Double-precision complex number.
pub type C64 = Complex<f64>;

pub type RealJet<T> = Jet<T>;
pub type ComplexJet<T> = Jet<Complex<T>>;
pub type RealJet64 = Jet<f64>;
pub type ComplexJet64 = Jet<C64>;
pub type RealJet32 = Jet<f32>;
pub type ComplexJet32 = Jet<Complex<f32>>;

pub type SymmetricMatrix64 = linalg::SymmetricMatrix<f64>;
pub type HermitianMatrix64 = linalg::HermitianMatrix<f64>;
pub type Matrix64 = Matrix<f64>;

pub type RealSubequation<T> = Subequation<T>;
pub type ComplexSubequation<T> = Subequation<Complex<T>>;
pub type RealSubequation64 = Subequation<f64>;
pub type ComplexSubequation64 = Subequation<C64>;


pub type GridFunction64 = field::GridFunction<f64>;
pub type CallableField64 = field::CallableField<f64>;
