//! Support vector machines for functional data.
//!
//! Curves are sampled on a common grid ([`func`]), optionally transformed
//! (centering, normalization, spline derivatives) and projected onto a
//! finite basis ([`basis`]), then compared with a base kernel ([`kernel`]).
//! The soft-margin dual is solved by SMO ([`svm`]) and hyperparameters are
//! chosen by penalized validation error on a split sample ([`select`]).
//! [`eval`] runs whole experiment protocols and [`io`] handles files and
//! configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod eval;
pub mod func;
pub mod io;
pub mod kernel;
pub mod select;
pub mod spline;
pub mod svm;

pub use error::{Error, ErrorCategory, Result};
pub use func::{Label, LabeledDataset, SampledFunction, SamplingGrid};
pub use kernel::{BaseKernel, FunctionalKernel, Transform};
pub use svm::{SolverOptions, SvmModel};
