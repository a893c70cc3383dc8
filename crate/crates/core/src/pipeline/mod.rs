//! Configuration, ingestion, batch analysis and report emission.

pub mod analysis;
pub mod config;
pub mod emit;
pub mod ingest;
pub mod tables;

pub use analysis::{analyze_records, run_analysis, Report, SCHEMA_VERSION};
pub use config::{ClampPolicy, FitOptions, RunConfig};
pub use emit::{emit, OutputFormat};
pub use ingest::{ingest, read_trace, Ingested, Rejection};
