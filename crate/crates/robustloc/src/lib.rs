//! File formats, Monte-Carlo experiments and the command-line front end
//! built on `robustloc-core`.

pub mod cli;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod experiments;
pub mod report;

pub use error::{AppError, AppResult};
pub use robustloc_core as core;
