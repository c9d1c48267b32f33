//! File formats, ingestion and pipeline orchestration for welfare
//! prediction from satellite-image features and weather.

pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod pipeline;
pub mod tiles;

pub use error::{Error, Result, EXIT_CODES};
