// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod kernel;
pub mod linear;
pub mod osgood;
pub mod quad;
pub mod semilinear;
pub mod source;
pub mod verify;

pub use error::{Error, Result};
