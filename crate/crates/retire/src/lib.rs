//! File formats, command line, HTTP service and acceptance suite around
//! `retire-core`.

pub mod acceptance;
pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;

pub use error::{AppError, AppResult};
