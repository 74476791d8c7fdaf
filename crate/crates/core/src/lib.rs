//! Control PINNs: one network that learns a system's state, adjoint and
//! open-loop optimal control by driving the residuals of the first-order
//! optimality system to zero, plus classical solvers that check the result.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod config;
pub mod error;
pub mod loss;
pub mod network;
pub mod par;
pub mod plot;
pub mod probe;
pub mod problems;
pub mod sampler;
pub mod trainer;
pub mod validators;

pub use error::{Error, Result};
