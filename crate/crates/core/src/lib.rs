// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_report;
pub mod dual_point;
pub mod error;
pub mod estimate;
pub mod extended;
pub mod geometry;
pub mod moduli;
pub mod pool;
pub mod probe;
pub mod problems;
pub mod sampling;
pub mod slopes_dual;
pub mod slopes_primal;
