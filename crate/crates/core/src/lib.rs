//! Finite-element pipeline for blood-volume-fraction-aware conductivity atlases.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod fick;
pub mod field;
pub mod hemo;
pub mod mesh;
pub mod metrics;
pub mod mixture;
pub mod pipeline;
pub mod ppe;
pub mod sparsela;

pub use error::{Error, ErrorKind, Result};
