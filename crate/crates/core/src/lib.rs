//! Second-order optimization on statistical manifolds with a Fisher metric
//! and a dual pair of α-connections.
//!
//! The central routine is [`optimizers::dual_newton_run`]: Newton steps whose
//! Hessian is taken with respect to the dual connection `∇*` and whose update
//! follows the primal connection `∇` through a quadratic retraction.
//! Natural gradient, mirror descent and Adam are provided as baselines.

// `!(x > 0.0)` guards are deliberate: they also reject NaN. Index loops
// mirror the textbook form of the triangular and tensor kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod objectives;
pub mod optimizers;
pub mod special;

pub use error::{Error, Result};
