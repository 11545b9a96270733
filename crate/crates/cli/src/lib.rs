//! Library side of the `das` command: argument types, subcommands and the
//! bench engine, shared with the integration tests.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
