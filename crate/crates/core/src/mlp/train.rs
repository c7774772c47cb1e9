//! Backpropagation of mean binary cross-entropy and the Adam training loop.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    cloud_to_matrix, forward_matrices, validate_architecture, Activation, AdamConfig, AdamState,
    LayerSpec, NetworkParams,
};
use crate::error::{Error, Result};
use crate::geometry::LabeledDataset;
use crate::rng::seeded;

/// Probabilities are clamped to `[PROB_CLAMP, 1 − PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Mean binary cross-entropy of predictions against 0/1 labels.
pub fn binary_cross_entropy(predictions: &[f64], labels: &[u8]) -> f64 {
    let n = predictions.len().max(1) as f64;
    predictions
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / n
}

/// Per-layer loss gradients, shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub loss: f64,
}

impl Gradients {
    /// Flattened in the same order as [`NetworkParams::to_vec`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                out.extend(w.row(r).iter());
            }
            out.extend(b.iter());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Exact gradient of the mean clamped binary cross-entropy over `batch`.
pub fn gradients(params: &NetworkParams, batch: &LabeledDataset) -> Result<Gradients> {
    let input = cloud_to_matrix(&batch.cloud);
    let n_out = params.layers.last().unwrap().out_dim();
    if n_out != 1 {
        return Err(Error::shape(format!(
            "binary cross-entropy needs one output unit, network has {n_out}"
        )));
    }
    backprop(params, &input, &batch.labels)
}

fn backprop(params: &NetworkParams, input: &DMatrix<f64>, labels: &[u8]) -> Result<Gradients> {
    let acts = forward_matrices(params, input)?;
    let n = labels.len();
    let scale = 1.0 / n.max(1) as f64;
    let out = acts.last().unwrap();
    let preds: Vec<f64> = out.column(0).iter().copied().collect();
    let loss = binary_cross_entropy(&preds, labels);

    let last = params.layers.last().unwrap().activation;
    // δ at the output pre-activation. Where the clamp is active the loss is
    // flat in p, so the gradient vanishes there.
    let mut delta = DMatrix::from_fn(n, 1, |i, _| {
        let p = preds[i];
        if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
            return 0.0;
        }
        let y = f64::from(labels[i]);
        if last == Activation::Sigmoid {
            (p - y) * scale
        } else {
            let dp = (1.0 - y) / (1.0 - p) - y / p;
            dp * scale * last.derivative_from_output(p)
        }
    });

    let n_layers = params.layers.len();
    let mut weights = vec![DMatrix::zeros(0, 0); n_layers];
    let mut biases = vec![DVector::zeros(0); n_layers];
    for l in (0..n_layers).rev() {
        let prev = if l == 0 { input } else { &acts[l - 1] };
        weights[l] = delta.transpose() * prev;
        biases[l] = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
        if l > 0 {
            let mut back = &delta * &params.layers[l].weights;
            let act = params.layers[l - 1].activation;
            back.zip_apply(&acts[l - 1], |g, y| *g *= act.derivative_from_output(y));
            delta = back;
        }
    }
    Ok(Gradients {
        weights,
        biases,
        loss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of rows held out; the reported accuracy is on the rest.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub history: Vec<EpochRecord>,
    pub validation_accuracy: Option<f64>,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

impl TrainOutcome {
    pub fn final_accuracy(&self) -> Option<f64> {
        self.history.last().map(|r| r.accuracy)
    }
}

fn evaluate(params: &NetworkParams, input: &DMatrix<f64>, labels: &[u8]) -> Result<(f64, f64)> {
    let acts = forward_matrices(params, input)?;
    let preds: Vec<f64> = acts.last().unwrap().column(0).iter().copied().collect();
    let correct = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
        .count();
    Ok((
        binary_cross_entropy(&preds, labels),
        correct as f64 / labels.len().max(1) as f64,
    ))
}

/// Trains a fresh network on `dataset` with Adam on mean binary cross-entropy.
///
/// Initialization, the train/validation split and the per-epoch shuffles use
/// separate streams of `config.seed`, so `NetworkParams::init(arch, seed)`
/// reproduces the starting point.
pub fn train(
    dataset: &LabeledDataset,
    arch: &[LayerSpec],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    validate_architecture(arch)?;
    if dataset.is_empty() {
        return Err(Error::domain("cannot train on an empty dataset"));
    }
    if arch[0].in_dim != dataset.cloud.dim() {
        return Err(Error::shape(format!(
            "dataset is {}-dimensional but the network expects {}",
            dataset.cloud.dim(),
            arch[0].in_dim
        )));
    }
    let last = arch.last().unwrap();
    if last.out_dim != 1 || last.activation != Activation::Sigmoid {
        return Err(Error::domain("output layer must be a single sigmoid unit"));
    }
    if config.batch_size == 0 {
        return Err(Error::domain("batch size must be positive"));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::domain("validation fraction must lie in [0, 1)"));
    }

    let mut params = NetworkParams::init(arch, config.seed)?;
    let mut adam = AdamState::new(
        params.param_count(),
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
    )?;

    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut split_rng = seeded(config.seed);
    split_rng.set_stream(2);
    order.shuffle(&mut split_rng);
    let n_val = ((n as f64) * config.validation_fraction).round() as usize;
    let n_val = n_val.min(n - 1);
    let validation_indices: Vec<usize> = order[..n_val].to_vec();
    let mut train_indices: Vec<usize> = order[n_val..].to_vec();
    train_indices.sort_unstable();

    let train_set = dataset.subset(&train_indices);
    let train_matrix = cloud_to_matrix(&train_set.cloud);

    let mut shuffle_rng = seeded(config.seed);
    shuffle_rng.set_stream(3);
    let mut batch_order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut flat = params.to_vec();
    let width = train_set.cloud.dim();

    for epoch in 1..=config.epochs {
        batch_order.shuffle(&mut shuffle_rng);
        for chunk in batch_order.chunks(config.batch_size) {
            let input = DMatrix::from_fn(chunk.len(), width, |r, c| train_matrix[(chunk[r], c)]);
            let labels: Vec<u8> = chunk.iter().map(|&i| train_set.labels[i]).collect();
            let grads =
                backprop(&params, &input, &labels).map_err(|_| Error::Divergence { epoch })?;
            if !grads.loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            adam.step(&mut flat, &grads.to_vec())?;
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            params.assign_from(&flat)?;
        }
        let (loss, accuracy) = evaluate(&params, &train_matrix, &train_set.labels)
            .map_err(|_| Error::Divergence { epoch })?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(EpochRecord {
            epoch,
            loss,
            accuracy,
        });
    }

    let validation_accuracy = if validation_indices.is_empty() {
        None
    } else {
        let val = dataset.subset(&validation_indices);
        Some(evaluate(&params, &cloud_to_matrix(&val.cloud), &val.labels)?.1)
    };

    Ok(TrainOutcome {
        params,
        history,
        validation_accuracy,
        train_indices,
        validation_indices,
    })
}

/// `epoch,loss,accuracy` rows.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in history {
        w.serialize(rec)?;
    }
    if history.is_empty() {
        w.write_record(["epoch", "loss", "accuracy"])?;
    }
    w.flush()?;
    Ok(())
}
