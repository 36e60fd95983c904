//! File formats and the command-line front end for `iconicity-core`.

pub mod atomic;
pub mod cli;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod model;
pub mod table;
pub mod tables;

pub use error::{AppError, AppResult};
