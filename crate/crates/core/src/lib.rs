//! Variable selection for binary outcomes with missing predictors: multiple
//! imputation by chained random forests, probit BART variable inclusion
//! proportions pooled with Rubin's rules, and the baselines and simulation
//! machinery used to compare them.

// `!(x > 0.0)` style checks are there to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bart;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod impute;
pub mod rng;
pub mod run;
pub mod selection;
pub mod sim;
pub mod stats;
pub mod trees;

pub use data::{ColumnKind, ColumnMeta, ColumnRole, DataMatrix};
pub use error::{Error, Result};
