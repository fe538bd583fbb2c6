//! Sequence IO, configuration, the frame loop, reporting, evaluation and the
//! synthetic scene oracle around `surround-core`.

#![deny(rust_2018_idioms)]

pub mod calib;
pub mod config;
pub mod error;
pub mod eval;
pub mod msr;
pub mod report;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
pub use surround_core as core;
