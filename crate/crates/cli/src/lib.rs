//! Preset runner and artifact writers behind the `faber-decay` binary.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod parse;
pub mod preset;
pub mod run;

pub use preset::{find_preset, preset_names, presets, Preset};
pub use run::{replay, run_preset, RunOptions, RunReport};
