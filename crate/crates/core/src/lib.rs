#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod calculus;
pub mod catalog;
pub mod expr;
pub mod jets;
mod linalg;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod subgeom;
pub mod theorems;
