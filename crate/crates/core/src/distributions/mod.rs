//! Per-class diagonal Gaussians over feature space: estimation from real
//! and synthesized features, sampling, storage, and per-dimension analysis.

mod gaussian;
mod store;

pub use gaussian::{
    dimension_histogram, estimate_distribution, sample_pseudo_feature, DimensionHistogram, GaussianClassDistribution,
    VARIANCE_FLOOR,
};
pub use store::{
    decode_store, encode_store, format_megabytes, load_store, save_store, storage_bytes, DistributionStore,
    StoreProvenance, STORE_MAGIC, STORE_VERSION,
};
