//! Command-line front end: configuration, the five-spot driver and output writers.

pub mod commands;
pub mod config;
pub mod fivespot;
pub mod output;

pub use commands::{main_with_args, parse_args, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, FIVESPOT_BUDGET_LIMIT, FIVESPOT_S_BOUNDS};
pub use config::{Config, Subcommand};
pub use fivespot::{run_fivespot, FiveSpotCase, FiveSpotSummary, OutputRecord, DEFAULT_INJECTION_RATE, OUTPUT_DAYS};
