//! Likelihood-bound falsification of uncertain structural models and
//! ensemble response prediction with the survivors.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod config;
pub mod falsify;
pub mod gaussian;
pub mod io;
pub mod modal;
pub mod physics;
pub mod pipeline;
pub mod predict;
pub mod registry;
pub mod scenario;
pub mod series;
pub mod study;

pub use error::{Error, Result};
