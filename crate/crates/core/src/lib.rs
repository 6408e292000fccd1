//! Correlation-network analysis of equity markets.
//!
//! The pipeline runs from raw price panels to normalized log returns, the
//! equal-time correlation matrix and its eigenmodes, MST and PMFG filtered
//! graphs, map-equation communities, same-sign correlation domains and the
//! sector interaction statistics computed from them. [`synth`] generates
//! factor-model markets with planted sectors for testing every stage.

pub mod community;
pub mod correlation;
pub mod domains;
pub mod eigen;
pub mod error;
pub mod filtergraph;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod rmt;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
