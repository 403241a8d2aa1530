//! Command-line pipeline for `tscausal`: config parsing, the end-to-end run,
//! report rendering and the synthetic benchmark.

pub mod bench;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod sample;
