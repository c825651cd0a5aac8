//! Command-line front end and reproducible simulation studies for
//! `shifttest`.

pub mod commands;
pub mod experiments;
pub mod runner;

pub use experiments::{ExperimentName, ExperimentSpec};
pub use runner::{Report, Row};
