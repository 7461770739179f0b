//! Configuration, sweeps and command helpers for the `trispdc` binary.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod sweep;

pub use config::{Axis, GeneratorMode, Scale, SweepConfig};
pub use sweep::{run_point, run_sweep, SweepOutput, SweepRow};
