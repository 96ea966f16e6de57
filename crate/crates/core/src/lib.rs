//! Tensor-structured radial basis function collocation for Helmholtz-type
//! boundary value problems in three dimensions, with Krylov solvers that work
//! directly on order-3 and order-6 tensors.

pub mod collocation;
pub mod error;
pub mod harness;
pub mod hmatrix;
pub mod krylov;
pub mod linalg;
pub mod rbf;
pub mod regularization;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Operator6, Shape3, SliceStack4, Tensor3};
