//! Synthetic point clouds: the twisted torus in four dimensions, uniform
//! box noise, the reference shapes used to validate the persistence engine,
//! and the labeled classification dataset.
//!
//! The twisted torus is a tube of radius `2P` swept around a ring of radius
//! `R` in the `(x, y)` plane, whose cross-section rotates by half a turn in
//! the `(z, w)` plane over one revolution:
//!
//! ```text
//! x = (R + 2P cos θ) cos φ
//! y = (R + 2P cos θ) sin φ
//! z = 2P sin θ cos(φ/2)
//! w = 2P sin θ sin(φ/2)
//! ```

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// How parameter angles are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `n_theta * n_phi` angles on a regular grid over `[0, 2π)²`.
    Grid { n_theta: usize, n_phi: usize },
    /// Independent uniform angles drawn from a seeded stream.
    UniformRandom { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistedTorusParams {
    pub major_radius: f64,
    pub tube_scale: f64,
    pub n_points: usize,
    pub sampling: Sampling,
}

impl Default for TwistedTorusParams {
    fn default() -> Self {
        Self {
            major_radius: 3.0,
            tube_scale: 1.0,
            n_points: 4900,
            sampling: Sampling::UniformRandom { seed: 0 },
        }
    }
}

impl TwistedTorusParams {
    pub fn validate(&self) -> Result<()> {
        let (r, p) = (self.major_radius, self.tube_scale);
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::domain(format!(
                "tube scale must be positive, got {p}"
            )));
        }
        if !(r.is_finite() && r > 2.0 * p) {
            return Err(Error::domain(format!(
                "major radius {r} must exceed twice the tube scale ({})",
                2.0 * p
            )));
        }
        if self.n_points == 0 {
            return Err(Error::domain("twisted torus needs at least one point"));
        }
        if let Sampling::Grid { n_theta, n_phi } = self.sampling {
            if n_theta * n_phi != self.n_points {
                return Err(Error::domain(format!(
                    "grid {n_theta}x{n_phi} does not hold {} points",
                    self.n_points
                )));
            }
        }
        Ok(())
    }
}

/// One point of the twisted torus at angles `(theta, phi)`.
pub fn twisted_torus_point(major_radius: f64, tube_scale: f64, theta: f64, phi: f64) -> [f64; 4] {
    let tube = 2.0 * tube_scale;
    let ring = major_radius + tube * theta.cos();
    let lift = tube * theta.sin();
    [
        ring * phi.cos(),
        ring * phi.sin(),
        lift * (phi / 2.0).cos(),
        lift * (phi / 2.0).sin(),
    ]
}

pub fn sample_twisted_torus(params: &TwistedTorusParams) -> Result<PointCloud> {
    params.validate()?;
    let (r, p) = (params.major_radius, params.tube_scale);
    let mut cloud = PointCloud::empty(4);
    match params.sampling {
        Sampling::Grid { n_theta, n_phi } => {
            for i in 0..n_theta {
                let theta = TAU * i as f64 / n_theta as f64;
                for j in 0..n_phi {
                    let phi = TAU * j as f64 / n_phi as f64;
                    cloud.push(&twisted_torus_point(r, p, theta, phi));
                }
            }
        }
        Sampling::UniformRandom { seed } => {
            let mut rng = seeded(seed);
            for _ in 0..params.n_points {
                let theta = rng.gen_range(0.0..TAU);
                let phi = rng.gen_range(0.0..TAU);
                cloud.push(&twisted_torus_point(r, p, theta, phi));
            }
        }
    }
    Ok(cloud)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub n_points: usize,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Uniform i.i.d. points inside an axis-aligned box.
pub fn sample_uniform_noise(params: &NoiseParams) -> Result<PointCloud> {
    if params.bounds.is_empty() {
        return Err(Error::domain("noise box needs at least one dimension"));
    }
    for (i, &(lo, hi)) in params.bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!(
                "noise interval {i} is degenerate: [{lo}, {hi}]"
            )));
        }
    }
    let mut rng = seeded(params.seed);
    let dim = params.bounds.len();
    let mut data = Vec::with_capacity(params.n_points * dim);
    for _ in 0..params.n_points {
        for &(lo, hi) in &params.bounds {
            data.push(rng.gen_range(lo..hi));
        }
    }
    PointCloud::from_flat(dim, data)
}

/// The bounding box of `cloud` grown by `pad` on every side.
pub fn padded_bounds(cloud: &PointCloud, pad: f64) -> Result<Vec<(f64, f64)>> {
    let bounds = cloud
        .bounds()
        .ok_or_else(|| Error::domain("cannot bound an empty cloud"))?;
    Ok(bounds
        .into_iter()
        .map(|(lo, hi)| (lo - pad, hi + pad))
        .collect())
}

/// Reference shapes with known Betti numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationShape {
    /// Unit circle in the plane.
    Circle,
    /// Unit sphere in three dimensions.
    Sphere,
    /// Ring torus with major radius 3 and tube radius 1 in three dimensions.
    Torus,
}

impl ValidationShape {
    pub fn ambient_dim(self) -> usize {
        match self {
            ValidationShape::Circle => 2,
            ValidationShape::Sphere | ValidationShape::Torus => 3,
        }
    }
}

const TORUS_MAJOR: f64 = 3.0;
const TORUS_MINOR: f64 = 1.0;

fn torus_point(theta: f64, phi: f64) -> [f64; 3] {
    let ring = TORUS_MAJOR + TORUS_MINOR * theta.cos();
    [
        ring * phi.cos(),
        ring * phi.sin(),
        TORUS_MINOR * theta.sin(),
    ]
}

/// Random points on a reference shape plus isotropic Gaussian jitter.
pub fn sample_validation_shape(
    shape: ValidationShape,
    n: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::domain("validation shape needs at least one point"));
    }
    if !(noise_sd.is_finite() && noise_sd >= 0.0) {
        return Err(Error::domain(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    let mut rng = seeded(seed);
    let mut cloud = PointCloud::empty(shape.ambient_dim());
    let mut p = Vec::with_capacity(3);
    for _ in 0..n {
        p.clear();
        match shape {
            ValidationShape::Circle => {
                let t = rng.gen_range(0.0..TAU);
                p.extend([t.cos(), t.sin()]);
            }
            ValidationShape::Sphere => loop {
                let v: [f64; 3] = [
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ];
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    p.extend(v.iter().map(|x| x / norm));
                    break;
                }
            },
            ValidationShape::Torus => {
                let theta = rng.gen_range(0.0..TAU);
                let phi = rng.gen_range(0.0..TAU);
                p.extend(torus_point(theta, phi));
            }
        }
        if noise_sd > 0.0 {
            for v in p.iter_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += noise_sd * e;
            }
        }
        cloud.push(&p);
    }
    Ok(cloud)
}

/// Deterministic, evenly spread points on a reference shape.
///
/// The circle uses equal angles, the sphere a Fibonacci lattice and the torus
/// a `⌈√n⌉`-wide angle grid truncated to `n` points.
pub fn validation_shape_grid(shape: ValidationShape, n: usize) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::domain("validation shape needs at least one point"));
    }
    let mut cloud = PointCloud::empty(shape.ambient_dim());
    match shape {
        ValidationShape::Circle => {
            for i in 0..n {
                let t = TAU * i as f64 / n as f64;
                cloud.push(&[t.cos(), t.sin()]);
            }
        }
        ValidationShape::Sphere => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..n {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let t = golden * i as f64;
                cloud.push(&[r * t.cos(), r * t.sin(), z]);
            }
        }
        ValidationShape::Torus => {
            let side = (n as f64).sqrt().ceil() as usize;
            for i in 0..n {
                let theta = TAU * (i % side) as f64 / side as f64;
                let phi = TAU * (i / side) as f64 / side as f64;
                cloud.push(&torus_point(theta, phi));
            }
        }
    }
    Ok(cloud)
}

/// A point cloud with binary class labels (1 = on the manifold, 0 = noise).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub cloud: PointCloud,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(cloud: PointCloud, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != cloud.len() {
            return Err(Error::shape(format!(
                "{} labels for {} points",
                labels.len(),
                cloud.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::domain(format!("label {bad} is not binary")));
        }
        Ok(Self { cloud, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Indices of rows carrying `label`.
    pub fn indices_with_label(&self, label: u8) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            cloud: self.cloud.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Concatenates manifold (label 1) and noise (label 0) points and shuffles
/// the rows with a seeded permutation.
pub fn assemble_dataset(
    manifold: &PointCloud,
    noise: &PointCloud,
    seed: u64,
) -> Result<LabeledDataset> {
    if manifold.dim() != noise.dim() {
        return Err(Error::shape(format!(
            "manifold is {}-dimensional but noise is {}-dimensional",
            manifold.dim(),
            noise.dim()
        )));
    }
    let n = manifold.len() + noise.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let mut cloud = PointCloud::empty(manifold.dim());
    let mut labels = Vec::with_capacity(n);
    for i in order {
        if i < manifold.len() {
            cloud.push(manifold.point(i));
            labels.push(1);
        } else {
            cloud.push(noise.point(i - manifold.len()));
            labels.push(0);
        }
    }
    LabeledDataset::new(cloud, labels)
}
