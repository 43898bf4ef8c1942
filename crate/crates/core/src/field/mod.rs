//! Sampled and closure-backed fields, their finite-difference jets, and the
//! regularising operators used before checking subharmonicity.

pub mod callable;
pub mod fd;
pub mod grid;
pub mod mollify;
pub mod supconv;
pub mod torus;
pub mod verify;

pub use callable::CallableField;
pub use fd::{fd_jet, fd_jet_callable, fd_jet_complex, fd_jets};
pub use grid::{GridFunction, GridGeometry};
pub use mollify::{kernel_weights, mollify};
pub use supconv::{sup_convolution, sup_convolution_brute, SupConvolution};
pub use torus::{substitute_exponential, torus_deviation, torus_symmetrize};
pub use verify::{
    hessian_floor, semiconvexity_constant, semiconvexity_constant_in, verify_subharmonic,
    verify_subharmonic_callable, Region,
};
