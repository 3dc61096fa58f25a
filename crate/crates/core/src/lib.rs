// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod existence;
pub mod expr;
pub mod funcgrid;
pub mod homeo;
pub mod io;
pub mod roots;
pub mod solveop;

pub use error::{Error, Result};
