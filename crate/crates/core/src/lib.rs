//! Exact finite task ecologies: excess-loss decomposition, partition-lattice
//! search, selection dynamics, kernel geometry, certification bounds and
//! corpus ingestion.

pub mod bounds;
pub mod ecology;
pub mod error;
pub mod geometry;
pub mod info;
pub mod ingest;
pub mod lab;
pub mod partition;
pub mod selection;
pub mod synth;

pub use ecology::{Context, DecompositionReport, Ecology};
pub use error::{Error, Result};
pub use partition::Partition;
