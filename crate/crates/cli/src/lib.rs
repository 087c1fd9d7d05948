//! Library half of the `hjb` binary: run configuration and the subcommand
//! implementations, kept importable for integration tests.

// Parameter checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
