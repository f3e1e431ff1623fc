//! Physics-informed neural networks for 1-D linear advection, trained under
//! several optimizers while recording the local curvature of the training
//! trajectory in parameter space.

// `!(a < b)` is used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod autodiff;
pub mod error;
pub mod geom;
pub mod kernels;
pub mod model;
pub mod optim;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
