// `!(x > 0.0)` is used on purpose: it rejects NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod filter;
pub mod denoise;
pub mod grid;
pub mod map;
pub mod pose;
pub mod register;
pub mod sim;

pub use error::{Error, Result};
pub use pose::{wrap_angle, Pose2};
