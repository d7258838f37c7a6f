//! Command-line harness around `fmp-core`: scenario files, multi-threaded
//! evaluation, run artifacts and benchmark suites.

pub mod cli;
pub mod config;
pub mod output;
pub mod parallel;
pub mod runner;
pub mod suites;
