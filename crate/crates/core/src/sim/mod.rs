//! Deterministic traffic simulation.
//!
//! Bucket assignment mirrors the production hash-mod scheme. Dataset
//! generators draw every case from its own RNG stream derived from
//! `(rng_seed, domain, case_index)`, so output does not depend on generation
//! order or thread scheduling.

mod buckets;
mod hash;
mod leakage;
mod rng;
mod series;

pub use buckets::{
    generate_bucket_case, generate_bucket_dataset, generate_noise_sweep, BucketCase,
    BucketDataset, BucketDatasetSpec,
};
pub use hash::{assign_bucket, Arm, ExperimentDef, Plane, DEFAULT_BUCKETS};
pub use leakage::inject_ghost_leakage;
pub use rng::{derive_seed, sample_multinomial, stream_rng, RNG_ALGORITHM};
pub use series::{
    generate_srm_series, generate_srm_suite, SrmSeries, SrmSeriesSpec, SrmSuiteCase, SrmSuiteSpec,
};
