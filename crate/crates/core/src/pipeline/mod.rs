//! End-to-end orchestration: configuration, the individual stages, the full
//! run with its manifest, and the reference-shape check.

mod config;
mod run;
mod stages;
mod validate;

pub use config::{
    ClusteringConfig, ExperimentConfig, FiltrationConfig, NetworkConfig, NoiseConfig, PcaConfig,
    ThresholdPolicy, TorusConfig, TrainSection,
};
pub use run::{
    run_experiment, Bar, ClusterSummary, DiagramSummary, LayerSummary, RunManifest, RunStatus,
    StageTiming, TrainingSummary, VERSION,
};
pub use stages::{
    cloud_diagram, cluster_representation, generate, train_config, train_network, CloudPersistence,
    GeneratedData, StageSeeds,
};
pub use validate::{check_shape, shape_suite, validate_shapes, ShapeCheck, ShapeSpec};
