//! Reference shapes with known homology, used to sanity-check the engine
//! end to end.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::filtration::{landmark_subsample, RipsOptions};
use crate::geometry::{sample_validation_shape, validation_shape_grid, ValidationShape};
use crate::persistence::{cloud_persistence, dominant_features, Algorithm};

/// One shape, its filtration settings and the Betti numbers expected at half
/// the filtration threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub shape: ValidationShape,
    pub n_points: usize,
    /// Deterministic grid placement instead of random samples.
    pub grid: bool,
    /// Maxmin landmarks taken from `n_points` samples; `None` uses them all.
    pub landmarks: Option<usize>,
    pub max_dim: usize,
    pub threshold: f64,
    pub expected: Vec<usize>,
}

pub fn shape_suite() -> Vec<ShapeSpec> {
    vec![
        ShapeSpec {
            shape: ValidationShape::Circle,
            n_points: 200,
            grid: false,
            landmarks: None,
            max_dim: 1,
            threshold: 2.0,
            expected: vec![1, 1],
        },
        ShapeSpec {
            shape: ValidationShape::Sphere,
            n_points: 300,
            grid: true,
            landmarks: None,
            max_dim: 2,
            threshold: 0.8,
            expected: vec![1, 0, 1],
        },
        ShapeSpec {
            shape: ValidationShape::Torus,
            n_points: 5000,
            grid: false,
            landmarks: Some(500),
            max_dim: 1,
            threshold: 2.0,
            expected: vec![1, 2],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    pub shape: ValidationShape,
    pub scale: f64,
    pub expected: Vec<usize>,
    pub observed: Vec<usize>,
    /// Persistence of the longest H1 bars, longest first; infinite for
    /// classes alive at the threshold.
    pub h1_persistence: Vec<f64>,
    pub passed: bool,
}

pub fn check_shape(spec: &ShapeSpec, seed: u64, algorithm: Algorithm) -> Result<ShapeCheck> {
    let mut cloud = if spec.grid {
        validation_shape_grid(spec.shape, spec.n_points)?
    } else {
        sample_validation_shape(spec.shape, spec.n_points, 0.0, seed)?
    };
    if let Some(k) = spec.landmarks {
        cloud = landmark_subsample(&cloud, k, seed)?.0;
    }
    let result = cloud_persistence(
        &cloud,
        &RipsOptions {
            max_dim: spec.max_dim,
            threshold: spec.threshold,
            ..Default::default()
        },
        algorithm,
    )?;
    let scale = spec.threshold / 2.0;
    let observed = result.diagram.betti_at(scale)?.betti;
    let h1_persistence = dominant_features(&result.diagram, 1, 3)
        .iter()
        .map(|p| p.persistence())
        .collect();
    Ok(ShapeCheck {
        shape: spec.shape,
        scale,
        passed: observed == spec.expected,
        expected: spec.expected.clone(),
        observed,
        h1_persistence,
    })
}

/// Runs every shape of [`shape_suite`].
pub fn validate_shapes(seed: u64, algorithm: Algorithm) -> Result<Vec<ShapeCheck>> {
    shape_suite()
        .iter()
        .map(|s| check_shape(s, seed, algorithm))
        .collect()
}
