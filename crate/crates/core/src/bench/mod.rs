//! Configuration, pipeline orchestration and report emission.
//!
//! A run is fully determined by an [`ExperimentConfig`]: the master seed
//! splits into per-stage streams, every stage persists its outputs before
//! the next one starts, and a [`RunManifest`] records stage status, gate
//! outcomes and the digest of every output file.

mod config;
mod pipeline;
mod report;

pub use config::{validate_config, ExperimentConfig, GateSpec, LawSpec, MacroSpec, RveSpec, SolverSpec};
pub use pipeline::{
    prepare_output, run_pipeline, FileDigest, GateOutcome, RunManifest, RunOptions, Stage, StageRecord, StageStatus,
};
pub use report::{emit_reports, verify_digests};
