//! Configuration, the review store and the HTTP review service behind the
//! `logicclip` command.

pub mod config;
pub mod error;
pub mod service;
pub mod store;

pub use config::{preset, RunConfig, PRESETS};
pub use error::{CliError, Result};
pub use store::{ReviewStore, Stats};
