//! Reproducible experiments: configuration, per-seed runs, manifests and
//! reports.

mod config;
mod pipeline;
mod report;

pub use config::{DataConfig, ExperimentConfig, RunConfig};
pub use pipeline::{
    config_from_manifest, initial_search_point, manifest_path, pipeline_runs, prepare_dataset,
    run_pipeline, test_seed, Experiment, RUN_A2C_NO_WEATHER, RUN_A2C_WEATHER, RUN_OPPORTUNISTIC,
    RUN_TIMING, STANDARD_RUNS,
};
pub use report::{BalanceReport, BalanceRow, RunManifest, SeedResult, Traces};
