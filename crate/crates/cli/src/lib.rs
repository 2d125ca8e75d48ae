//! Library side of the `sympkit` binary: config parsing, command runners and
//! report encoding.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
