//! Numerical tools for Hardy-space kernels on the disk and the annulus,
//! Abrahamse-Pick feasibility, contractivity of matrix-induced homomorphisms
//! and explicit dilations of the resulting 2x2 model operators.

// `!(x < y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod dilation;
pub mod domain;
pub mod factorization;
pub mod error;
pub mod exec;
pub mod homomorphism;
pub mod kernel;
pub mod linalg;
pub mod opspace;
pub mod pick;
pub mod rational;
pub mod sampling;

pub use domain::{build_quadrature, BoundaryQuadrature, KernelIndex, PlanarDomain};
pub use error::{Error, Result};
pub use kernel::{szego_diag, TruncatedKernel};
pub use num_complex::Complex64;
