//! Std companion to the core library: file formats (scene and report
//! JSON, sequence and heatmap CSV, SVG heatmaps), the Monte Carlo
//! harness (experiments, probability-bound checks, figure reproduction,
//! benchmarks), and the `ddchirp` command-line interface.
//!
//! The split keeps the detection mathematics `no_std` while everything
//! touching files, clocks, or process exit codes lives here.

pub mod cli;
pub mod formats;
pub mod harness;
