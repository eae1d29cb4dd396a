//! Machine learning on Grassmann manifolds.

// negated comparisons reject NaN in validation; index loops touch several arrays at once
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adapt;
pub mod clustering;
pub mod completion;
pub mod datasets;
pub mod error;
pub mod gda;
pub mod grnet;
pub mod kernels;
pub mod manifold;
pub mod numerics;
pub mod optim;

pub use error::{Error, ErrorClass, Result};
pub use numerics::Matrix;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
