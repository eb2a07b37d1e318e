//! Tensor Krylov-subspace methods for Tikhonov-regularized linear systems
//! `A *_N X = C` under the Einstein product, with helpers for restoring
//! blurred color images and videos.

// negated comparisons deliberately reject NaN parameters
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imaging;
pub mod krylov;
pub mod operators;
pub mod regularization;
pub mod solvers;
pub mod tensor;

pub use error::{Error, Result};
pub use operators::{LinearTensorOperator, PsfBlurOperator, PsfKernel};
pub use solvers::{ggkb_tikhonov, tg_gmres_tikhonov, GgkbConfig, GmresConfig, Method, MuRule, SolveReport};
pub use tensor::{DenseTensor, Shape, TensorStack};
