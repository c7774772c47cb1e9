//! A small fully connected network: each layer maps `z ↦ σ(Wz + b)` and the
//! network is the composition of its layers. The post-activation output of
//! every layer is kept as a [`LayerRepresentation`].

mod adam;
mod diagnostic;
mod train;

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

pub use adam::{AdamConfig, AdamState};
pub use diagnostic::{homeomorphism_diagnostic, HomeomorphismReport, DET_TOLERANCE};
pub use train::{
    binary_cross_entropy, gradients, train, write_history_csv, EpochRecord, Gradients, TrainConfig,
    TrainOutcome, PROB_CLAMP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Derivative expressed through the activation's own output `y = σ(x)`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::Parse(format!("unknown activation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Input width 4, hidden widths 10, 30, 10 with the given activation, and a
/// single sigmoid output unit.
pub fn reference_architecture(hidden: Activation) -> Vec<LayerSpec> {
    architecture(4, &[10, 30, 10], hidden)
}

/// `input → hidden... → 1` with the hidden activation on every hidden layer
/// and a sigmoid output.
pub fn architecture(input: usize, hidden: &[usize], activation: Activation) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &width in hidden {
        specs.push(LayerSpec::new(prev, width, activation));
        prev = width;
    }
    specs.push(LayerSpec::new(prev, 1, Activation::Sigmoid));
    specs
}

pub fn validate_architecture(arch: &[LayerSpec]) -> Result<()> {
    if arch.is_empty() {
        return Err(Error::domain("architecture has no layers"));
    }
    for (i, spec) in arch.iter().enumerate() {
        if spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(Error::domain(format!("layer {} has a zero width", i + 1)));
        }
    }
    for (i, pair) in arch.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::shape(format!(
                "layer {} outputs {} values but layer {} expects {}",
                i + 1,
                pair[0].out_dim,
                i + 2,
                pair[1].in_dim
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.in_dim(), self.out_dim(), self.activation)
    }

    /// `σ(X Wᵀ + b)` for a batch `X` with one row per sample.
    fn apply(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = input * self.weights.transpose();
        for mut row in z.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.bias.iter()) {
                *v = self.activation.apply(*v + b);
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<DenseLayer>,
}

impl NetworkParams {
    /// Checks shapes chain and all entries are finite.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let specs: Vec<_> = layers.iter().map(DenseLayer::spec).collect();
        validate_architecture(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape(format!(
                    "layer {} has {} biases for {} outputs",
                    i + 1,
                    l.bias.len(),
                    l.out_dim()
                )));
            }
            if l.weights
                .iter()
                .chain(l.bias.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::domain(format!(
                    "layer {} has a non-finite entry",
                    i + 1
                )));
            }
        }
        Ok(Self { layers })
    }

    /// He-uniform weights for ReLU layers, Xavier-uniform otherwise; zero biases.
    pub fn init(arch: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_architecture(arch)?;
        let mut rng = init_stream(seed);
        let layers = arch
            .iter()
            .map(|spec| {
                let limit = match spec.activation {
                    Activation::Relu => (6.0 / spec.in_dim as f64).sqrt(),
                    Activation::Tanh | Activation::Sigmoid => {
                        (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt()
                    }
                };
                let weights = DMatrix::from_fn(spec.out_dim, spec.in_dim, |_, _| {
                    rng.gen_range(-limit..limit)
                });
                DenseLayer {
                    weights,
                    bias: DVector::zeros(spec.out_dim),
                    activation: spec.activation,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn architecture(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(DenseLayer::spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// All parameters as one vector: per layer, weights row-major then biases.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            for r in 0..l.out_dim() {
                out.extend(l.weights.row(r).iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    /// Inverse of [`NetworkParams::to_vec`].
    pub fn assign_from(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for r in 0..l.weights.nrows() {
                for c in 0..l.weights.ncols() {
                    l.weights[(r, c)] = it.next().unwrap();
                }
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NetworkDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<NetworkDoc>(text)?.try_into()
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn read_json<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

pub(crate) fn init_stream(seed: u64) -> Rng {
    let mut rng = seeded(seed);
    rng.set_stream(1);
    rng
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    /// `out_dim` rows of `in_dim` weights.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl From<&NetworkParams> for NetworkDoc {
    fn from(p: &NetworkParams) -> Self {
        NetworkDoc {
            layers: p
                .layers
                .iter()
                .map(|l| LayerDoc {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weights: l
                        .weights
                        .row_iter()
                        .map(|r| r.iter().copied().collect())
                        .collect(),
                    bias: l.bias.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkDoc> for NetworkParams {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (i, l) in doc.layers.into_iter().enumerate() {
            if l.weights.len() != l.out_dim || l.weights.iter().any(|r| r.len() != l.in_dim) {
                return Err(Error::shape(format!(
                    "layer {} weights are not {}x{}",
                    i + 1,
                    l.out_dim,
                    l.in_dim
                )));
            }
            let flat: Vec<f64> = l.weights.into_iter().flatten().collect();
            layers.push(DenseLayer {
                weights: DMatrix::from_row_slice(l.out_dim, l.in_dim, &flat),
                bias: DVector::from_vec(l.bias),
                activation: l.activation,
            });
        }
        NetworkParams::new(layers)
    }
}

/// The post-activation output of one layer over a cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRepresentation {
    /// 1-based; the input itself is not a representation.
    pub layer_index: usize,
    pub activation: Activation,
    pub values: PointCloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// The network output, one value per input point.
    pub output: Vec<f64>,
    pub representations: Vec<LayerRepresentation>,
}

pub(crate) fn cloud_to_matrix(cloud: &PointCloud) -> DMatrix<f64> {
    DMatrix::from_row_slice(cloud.len(), cloud.dim(), cloud.as_flat())
}

fn matrix_to_cloud(m: &DMatrix<f64>) -> Result<PointCloud> {
    let mut flat = Vec::with_capacity(m.len());
    for r in m.row_iter() {
        flat.extend(r.iter());
    }
    PointCloud::from_flat(m.ncols(), flat)
}

/// Runs every layer and returns each layer's activations.
pub(crate) fn forward_matrices(
    params: &NetworkParams,
    input: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    if input.ncols() != params.input_dim() {
        return Err(Error::shape(format!(
            "input has {} columns but the network expects {}",
            input.ncols(),
            params.input_dim()
        )));
    }
    let mut outs: Vec<DMatrix<f64>> = Vec::with_capacity(params.layers.len());
    for (i, layer) in params.layers.iter().enumerate() {
        let prev = outs.last().unwrap_or(input);
        let next = layer.apply(prev);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow(format!(
                "layer {} produced a non-finite activation",
                i + 1
            )));
        }
        outs.push(next);
    }
    Ok(outs)
}

pub fn forward(params: &NetworkParams, input: &PointCloud) -> Result<ForwardPass> {
    let outs = forward_matrices(params, &cloud_to_matrix(input))?;
    let output = outs.last().unwrap().column(0).iter().copied().collect();
    let representations = outs
        .iter()
        .zip(&params.layers)
        .enumerate()
        .map(|(i, (m, layer))| {
            Ok(LayerRepresentation {
                layer_index: i + 1,
                activation: layer.activation,
                values: matrix_to_cloud(m)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ForwardPass {
        output,
        representations,
    })
}

/// Every layer's representation of `cloud`, hidden layers first and the
/// output layer last.
pub fn extract_representations(
    params: &NetworkParams,
    cloud: &PointCloud,
) -> Result<Vec<LayerRepresentation>> {
    Ok(forward(params, cloud)?.representations)
}

/// Network outputs thresholded at 0.5.
pub fn predict(params: &NetworkParams, cloud: &PointCloud) -> Result<Vec<u8>> {
    Ok(forward(params, cloud)?
        .output
        .into_iter()
        .map(|p| u8::from(p >= 0.5))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single(weights: DMatrix<f64>, bias: Vec<f64>, activation: Activation) -> NetworkParams {
        NetworkParams::new(vec![DenseLayer {
            weights,
            bias: DVector::from_vec(bias),
            activation,
        }])
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_half() {
        let mut params = NetworkParams::init(&reference_architecture(Activation::Relu), 0).unwrap();
        let zeros = vec![0.0; params.param_count()];
        params.assign_from(&zeros).unwrap();
        let input = PointCloud::from_rows(&[[1.0, -2.0, 3.0, 0.5], [9.0, 9.0, 9.0, 9.0]]).unwrap();
        let pass = forward(&params, &input).unwrap();
        for rep in &pass.representations[..3] {
            assert!(rep.values.as_flat().iter().all(|&v| v == 0.0));
        }
        assert_eq!(pass.output, vec![0.5, 0.5]);
    }

    #[test]
    fn relu_identity_layer() {
        let p = single(DMatrix::identity(2, 2), vec![0.0, 0.0], Activation::Relu);
        let out = forward(&p, &PointCloud::from_rows(&[[-1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(out.representations[0].values.point(0), &[0.0, 2.0]);
    }

    #[test]
    fn scalar_tanh_layer() {
        let p = single(
            DMatrix::from_element(1, 1, 2.0),
            vec![-1.0],
            Activation::Tanh,
        );
        let out = forward(&p, &PointCloud::from_rows(&[[1.0]]).unwrap()).unwrap();
        assert_abs_diff_eq!(out.output[0], 0.761_594_155_955_764_9, epsilon = 1e-12);
    }

    #[test]
    fn identity_tanh_representation() {
        let p = single(DMatrix::identity(3, 3), vec![0.0; 3], Activation::Tanh);
        let cloud = PointCloud::from_rows(&[[0.3, -1.2, 4.0], [0.0, 2.0, -0.1]]).unwrap();
        let reps = extract_representations(&p, &cloud).unwrap();
        for (a, b) in reps[0].values.as_flat().iter().zip(cloud.as_flat()) {
            assert_eq!(*a, b.tanh());
        }
    }

    #[test]
    fn reference_widths_and_empty_input() {
        let params = NetworkParams::init(&reference_architecture(Activation::Tanh), 4).unwrap();
        let reps = extract_representations(&params, &PointCloud::empty(4)).unwrap();
        let widths: Vec<_> = reps.iter().map(|r| r.values.dim()).collect();
        assert_eq!(widths, vec![10, 30, 10, 1]);
        assert!(reps.iter().all(|r| r.values.is_empty()));
        assert_eq!(
            reps.iter().map(|r| r.layer_index).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );
    }

    #[test]
    fn shape_and_overflow_errors() {
        let params = NetworkParams::init(&reference_architecture(Activation::Relu), 0).unwrap();
        let wrong = PointCloud::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(forward(&params, &wrong), Err(Error::Shape(_))));

        let huge = single(
            DMatrix::from_element(1, 1, 1e300),
            vec![0.0],
            Activation::Relu,
        );
        let big = PointCloud::from_rows(&[[1e300]]).unwrap();
        assert!(matches!(
            forward(&huge, &big),
            Err(Error::NumericOverflow(_))
        ));
    }

    #[test]
    fn broken_chain_is_rejected() {
        let arch = vec![
            LayerSpec::new(4, 10, Activation::Relu),
            LayerSpec::new(9, 1, Activation::Sigmoid),
        ];
        assert!(matches!(
            NetworkParams::init(&arch, 0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let params = NetworkParams::init(&reference_architecture(Activation::Relu), 17).unwrap();
        let text = params.to_json().unwrap();
        assert_eq!(NetworkParams::from_json(&text).unwrap(), params);
        assert!(text.contains("\"activation\": \"relu\""));
    }

    #[test]
    fn flat_vector_round_trip() {
        let params = NetworkParams::init(&architecture(3, &[2], Activation::Tanh), 1).unwrap();
        let flat = params.to_vec();
        // row-major: first weight row of layer 1 comes first
        assert_eq!(flat[0], params.layers[0].weights[(0, 0)]);
        assert_eq!(flat[1], params.layers[0].weights[(0, 1)]);
        let mut other = NetworkParams::init(&params.architecture(), 99).unwrap();
        other.assign_from(&flat).unwrap();
        assert_eq!(other, params);
    }
}
