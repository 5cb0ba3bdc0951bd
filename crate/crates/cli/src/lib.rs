//! Command-line driver: simulate scans, process them into spray plans,
//! train the profile classifier and summarize run reports.

pub mod commands;
pub mod config;
pub mod exit;
pub mod pipeline;
pub mod report;
pub mod sink;

pub use commands::{run, Cli};
pub use config::PipelineConfig;
pub use exit::{status_of, ExitStatus};
pub use report::RunReport;
