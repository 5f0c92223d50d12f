//! Frequency estimators for the per-window query-name counts, and the
//! analytic cost comparison between them.

mod cms;
pub mod cost;
mod dwshh;
mod hash;
mod ws;

use thiserror::Error;

pub use cms::CountMinSketch;
pub use cost::{cost_model, cost_table, CostReport, MemoryUnit, Method, SketchCostParams};
pub use dwshh::DistinctWeightedSample;
pub use hash::HashFamily;
pub use ws::ThresholdSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("sketch dimensions must be positive (depth {depth}, width {width})")]
    ZeroDimension { depth: usize, width: usize },
    #[error("sample capacity must be positive")]
    ZeroCapacity,
    #[error("sampling threshold must be positive and finite, got {0}")]
    BadThreshold(f64),
    #[error("cost-model parameters must all be positive")]
    NonPositiveCostParam,
}

/// Common surface of the per-key frequency estimators.
pub trait FrequencyEstimator {
    fn add(&mut self, key: &[u8]);
    fn estimate(&self, key: &[u8]) -> u64;
    fn reset(&mut self);
}
