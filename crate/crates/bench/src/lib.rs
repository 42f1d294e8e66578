//! File formats, synthetic graphs and the experiment harness behind the
//! `priorprop` binary.

pub mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod spec;
pub mod synth;

pub use error::{BenchError, Result};
