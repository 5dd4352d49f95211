//! Solvers for the non-uniform k-center problem.

#![allow(clippy::needless_range_loop)]

pub mod approx;
pub mod embed;
pub mod enumerate;
pub mod error;
pub mod gadgets;
pub mod lp;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod rmfct;

pub use error::{Error, Result};
