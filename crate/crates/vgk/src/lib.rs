//! Command-line front end for the `vgk-core` solvers: run configuration,
//! CSV/JSON outputs, presets, and the verification suite.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod presets;
pub mod run;
pub mod verify;
