//! Configuration files, output files and the command-line interface.

pub mod cli;
pub mod config;
pub mod files;

pub use config::{
    load_config, parse_config, parse_config_with, serialize_config, ConfigError, Overrides,
    RunConfig,
};
pub use files::{
    read_series, write_series, write_series_with_metadata, write_snapshot, FileError, Metadata,
};
