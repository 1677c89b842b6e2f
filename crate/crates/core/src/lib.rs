//! Two-timescale SIRS epidemic model with hospitalizations.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod econ;
pub mod error;
pub mod model;
pub mod roots;
pub mod sim;
pub mod slowfast;

pub use error::{Error, Result};
pub use model::{ModelParams, State};
