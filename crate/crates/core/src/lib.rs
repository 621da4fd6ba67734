//! Decoherence of superposed mesoscopic targets by a light dark-matter wind.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod atmosphere;
pub mod born;
pub mod cli;
pub mod decoherence;
pub mod error;
pub mod flux;
pub mod model;
pub mod quad;
pub mod sensitivity;
pub mod special;
pub mod statistics;
pub mod units;

pub use error::{Error, Result};
