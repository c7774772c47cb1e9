//! Experiment configuration and its two text encodings.
//!
//! The plain-text form is one `dotted.key = value` per line. Values are JSON
//! literals (`3`, `0.5`, `[10, 30, 10]`, `"tanh"`); a value that is not valid
//! JSON is read as a bare string, so `network.activation = tanh` also works.
//! Blank lines and lines starting with `#` are ignored.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::analysis::EpsPolicy;
use crate::error::{Error, Result};
use crate::geometry::{Sampling, TwistedTorusParams};
use crate::mlp::{architecture, validate_architecture, Activation, LayerSpec};
use crate::persistence::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusConfig {
    pub major_radius: f64,
    pub tube_scale: f64,
    pub n_points: usize,
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self {
            major_radius: 3.0,
            tube_scale: 1.0,
            n_points: 4900,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub n_points: usize,
    /// Margin added on every side of the manifold's bounding box.
    pub padding: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            n_points: 4900,
            padding: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: vec![10, 30, 10],
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 64,
            learning_rate: 1e-3,
            validation_fraction: 0.2,
        }
    }
}

/// Where the Rips filtration stops.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdPolicy {
    /// The enclosing radius of the (landmark) cloud.
    #[default]
    Enclosing,
    Fixed(f64),
}

impl Serialize for ThresholdPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThresholdPolicy::Enclosing => s.serialize_str("enclosing"),
            ThresholdPolicy::Fixed(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for ThresholdPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "enclosing" => Ok(ThresholdPolicy::Enclosing),
            Value::Number(n) => n
                .as_f64()
                .map(ThresholdPolicy::Fixed)
                .ok_or_else(|| serde::de::Error::custom("threshold is not a finite number")),
            other => Err(serde::de::Error::custom(format!(
                "threshold must be \"enclosing\" or a number, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiltrationConfig {
    pub max_dim: usize,
    pub threshold: ThresholdPolicy,
    /// Clouds larger than this are reduced to maxmin landmarks first.
    pub landmarks: usize,
    pub algorithm: Algorithm,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        Self {
            max_dim: 1,
            threshold: ThresholdPolicy::Enclosing,
            landmarks: 400,
            algorithm: Algorithm::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub min_pts: usize,
    pub eps: EpsPolicy,
    /// Clusters smaller than this get no persistence diagram.
    pub min_cluster_size: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            min_pts: 10,
            eps: EpsPolicy::default(),
            min_cluster_size: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PcaConfig {
    pub components: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self { components: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub torus: TorusConfig,
    pub noise: NoiseConfig,
    pub network: NetworkConfig,
    pub train: TrainSection,
    pub filtration: FiltrationConfig,
    pub clustering: ClusteringConfig,
    pub pca: PcaConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            torus: TorusConfig::default(),
            noise: NoiseConfig::default(),
            network: NetworkConfig::default(),
            train: TrainSection::default(),
            filtration: FiltrationConfig::default(),
            clustering: ClusteringConfig::default(),
            pca: PcaConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn torus_params(&self, seed: u64) -> TwistedTorusParams {
        TwistedTorusParams {
            major_radius: self.torus.major_radius,
            tube_scale: self.torus.tube_scale,
            n_points: self.torus.n_points,
            sampling: Sampling::UniformRandom { seed },
        }
    }

    pub fn architecture(&self) -> Vec<LayerSpec> {
        architecture(4, &self.network.hidden, self.network.activation)
    }

    pub fn validate(&self) -> Result<()> {
        self.torus_params(0).validate()?;
        if self.network.hidden.is_empty() {
            return Err(Error::domain("network.hidden needs at least one layer"));
        }
        if !(self.noise.padding.is_finite() && self.noise.padding >= 0.0) {
            return Err(Error::domain("noise.padding must be >= 0"));
        }
        validate_architecture(&self.architecture())?;
        let tr = &self.train;
        if tr.batch_size == 0 {
            return Err(Error::domain("train.batch_size must be positive"));
        }
        if !(tr.learning_rate > 0.0 && tr.learning_rate.is_finite()) {
            return Err(Error::domain("train.learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&tr.validation_fraction) {
            return Err(Error::domain(
                "train.validation_fraction must lie in [0, 1)",
            ));
        }
        let f = &self.filtration;
        if f.max_dim > crate::filtration::MAX_HOMOLOGY_DIM {
            return Err(Error::domain(format!(
                "filtration.max_dim must be <= {}",
                crate::filtration::MAX_HOMOLOGY_DIM
            )));
        }
        if let ThresholdPolicy::Fixed(v) = f.threshold {
            if v.is_nan() || v < 0.0 {
                return Err(Error::domain("filtration.threshold must be >= 0"));
            }
        }
        if f.landmarks == 0 {
            return Err(Error::domain("filtration.landmarks must be positive"));
        }
        if self.clustering.min_pts == 0 {
            return Err(Error::domain("clustering.min_pts must be positive"));
        }
        self.clustering.eps.validate()?;
        if self.pca.components == 0 {
            return Err(Error::domain("pca.components must be positive"));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_value(parse_kv(text)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads either encoding; JSON is recognized by a leading `{`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json_str(&text)
        } else {
            Self::from_kv_str(&text)
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The plain-text encoding; `from_kv_str` reads it back unchanged.
    pub fn to_kv_string(&self) -> Result<String> {
        let mut lines = Vec::new();
        flatten("", &serde_json::to_value(self)?, &mut lines);
        Ok(lines.join("\n") + "\n")
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        leaf => out.push(format!("{prefix} = {leaf}")),
    }
}

fn parse_kv(text: &str) -> Result<Value> {
    let mut root = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: {what}: {raw}", lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        let path: Vec<&str> = key.split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(bad("empty key segment"));
        }
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
        let (last, parents) = path.split_last().unwrap();
        let mut node = &mut root;
        for p in parents {
            let entry = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| bad("key is both a value and a section"))?;
        }
        if node.insert(last.to_string(), value).is_some() {
            return Err(bad("duplicate key"));
        }
    }
    Ok(Value::Object(root))
}
