//! Library side of the command-line front end: configuration parsing,
//! dispatch, deterministic report writers, SVG plots and the verification
//! suite.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod svg;
pub mod verify;

pub use error::CliError;
