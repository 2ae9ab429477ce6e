// !(x > 0.0) in validation rejects NaN; x <= 0.0 would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Scenario harness, configuration, and CSV output for the
//! control-allocation experiments; the `ctrlalloc` binary is a thin
//! front end over this crate.

pub mod config;
pub mod error;
pub mod harness;
pub mod output;
