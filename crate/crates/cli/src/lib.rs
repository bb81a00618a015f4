//! Configuration parsing, command drivers and file writers behind the
//! `isogroup` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{parse_config, parse_config_str, ConfigError, FileConfig};
