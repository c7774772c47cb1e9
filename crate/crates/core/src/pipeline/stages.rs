//! The individual steps of an experiment. `run_experiment` chains these, and
//! the command-line tool exposes each one on its own.

use serde::{Deserialize, Serialize};

use super::config::{ClusteringConfig, ExperimentConfig, FiltrationConfig, ThresholdPolicy};
use crate::analysis::{dbscan, resolve_eps, ClusterAssignment, DbscanParams};
use crate::cloud::PointCloud;
use crate::error::Result;
use crate::filtration::{build_distance_matrix, landmark_subsample, rips_filtration, RipsOptions};
use crate::geometry::{
    assemble_dataset, padded_bounds, sample_twisted_torus, sample_uniform_noise, LabeledDataset,
    NoiseParams,
};
use crate::mlp::{train, TrainConfig, TrainOutcome};
use crate::persistence::{compute_persistence, PersistenceResult};
use crate::rng::{stage_seed, Stage};

/// Per-stage seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub manifold: u64,
    pub noise: u64,
    pub shuffle: u64,
    pub training: u64,
    pub landmarks: u64,
}

impl StageSeeds {
    pub fn derive(master: u64) -> Self {
        StageSeeds {
            manifold: stage_seed(master, Stage::Manifold),
            noise: stage_seed(master, Stage::Noise),
            shuffle: stage_seed(master, Stage::Shuffle),
            training: stage_seed(master, Stage::Training),
            landmarks: stage_seed(master, Stage::Landmarks),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub manifold: PointCloud,
    pub noise: PointCloud,
    pub dataset: LabeledDataset,
}

impl GeneratedData {
    /// Manifold-labeled rows of the dataset, in dataset order, with their
    /// row indices.
    pub fn manifold_rows(&self) -> (PointCloud, Vec<usize>) {
        let idx = self.dataset.indices_with_label(1);
        (self.dataset.cloud.select(&idx), idx)
    }
}

pub fn generate(config: &ExperimentConfig) -> Result<GeneratedData> {
    let seeds = StageSeeds::derive(config.seed);
    let manifold = sample_twisted_torus(&config.torus_params(seeds.manifold))?;
    let noise = sample_uniform_noise(&NoiseParams {
        n_points: config.noise.n_points,
        bounds: padded_bounds(&manifold, config.noise.padding)?,
        seed: seeds.noise,
    })?;
    let dataset = assemble_dataset(&manifold, &noise, seeds.shuffle)?;
    Ok(GeneratedData {
        manifold,
        noise,
        dataset,
    })
}

pub fn train_config(config: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        epochs: config.train.epochs,
        batch_size: config.train.batch_size,
        learning_rate: config.train.learning_rate,
        seed: StageSeeds::derive(config.seed).training,
        validation_fraction: config.train.validation_fraction,
    }
}

pub fn train_network(config: &ExperimentConfig, dataset: &LabeledDataset) -> Result<TrainOutcome> {
    train(dataset, &config.architecture(), &train_config(config))
}

pub fn cluster_representation(
    values: &PointCloud,
    config: &ClusteringConfig,
) -> Result<(DbscanParams, ClusterAssignment)> {
    let params = resolve_eps(values, config.eps, config.min_pts)?;
    let assignment = dbscan(values, &params)?;
    Ok((params, assignment))
}

/// Persistence of a cloud after optional landmark reduction.
#[derive(Debug, Clone)]
pub struct CloudPersistence {
    pub result: PersistenceResult,
    /// Rows of the input cloud used as vertices.
    pub vertices: Vec<usize>,
    pub threshold: f64,
}

pub fn cloud_diagram(
    cloud: &PointCloud,
    config: &FiltrationConfig,
    landmark_seed: u64,
) -> Result<CloudPersistence> {
    let (sample, vertices) = if cloud.len() > config.landmarks {
        landmark_subsample(cloud, config.landmarks, landmark_seed)?
    } else {
        (cloud.clone(), (0..cloud.len()).collect())
    };
    let dm = build_distance_matrix(&sample);
    let threshold = match config.threshold {
        ThresholdPolicy::Enclosing => dm.enclosing_radius(),
        ThresholdPolicy::Fixed(t) => t,
    };
    let filt = rips_filtration(
        &dm,
        &RipsOptions {
            max_dim: config.max_dim,
            threshold,
            ..Default::default()
        },
    )?;
    Ok(CloudPersistence {
        result: compute_persistence(&filt, config.algorithm)?,
        vertices,
        threshold,
    })
}
