//! Command-line entry points and the reader-study HTTP service.

pub mod cli;
pub mod config;
pub mod server;
