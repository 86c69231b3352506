//! Fully connected classifier with softmax cross-entropy loss.
//!
//! The loss is summed over the batch (not averaged), so the learning rate
//! absorbs the `1/B` factor. Parameters are stored as one weight tensor of
//! shape `[out, in]` and one bias tensor of shape `[out]` per layer, with ids
//! `layer{i}.weight` and `layer{i}.bias`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{OptimError, Result};
use crate::tensor::ParameterTensor;

/// Probabilities are clamped to this value before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Standard normal weights scaled by `1/sqrt(fan_in)`.
    #[default]
    ScaledNormal,
    /// Unscaled standard normal weights.
    StandardNormal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    /// Input width, hidden widths, then the class count.
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>, activation: Activation, seed: u64) -> Result<Self> {
        let spec = Self {
            layer_widths,
            activation,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(OptimError::Config(
                "an MLP needs at least input and output widths".into(),
            ));
        }
        if self.layer_widths.contains(&0) {
            return Err(OptimError::Config("layer widths must be positive".into()));
        }
        if self.classes() < 2 {
            return Err(OptimError::Config("need at least 2 output classes".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_widths.last().unwrap_or(&0)
    }

    pub fn num_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }

    /// Draws initial parameters from the spec's seed. Biases start at zero.
    pub fn init_params(&self, scheme: InitScheme) -> Result<Vec<ParameterTensor>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut params = Vec::with_capacity(2 * self.num_layers());
        for (l, pair) in self.layer_widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = match scheme {
                InitScheme::ScaledNormal => 1.0 / (fan_in as f64).sqrt(),
                InitScheme::StandardNormal => 1.0,
            };
            let weights = (0..fan_in * fan_out)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                })
                .collect();
            params.push(ParameterTensor::new(
                format!("layer{l}.weight"),
                &[fan_out, fan_in],
                weights,
            )?);
            params.push(ParameterTensor::zeros(
                format!("layer{l}.bias"),
                &[fan_out],
            )?);
        }
        Ok(params)
    }

    fn check_params(&self, params: &[ParameterTensor]) -> Result<()> {
        if params.len() != 2 * self.num_layers() {
            return Err(OptimError::Dimension(format!(
                "expected {} parameter tensors, got {}",
                2 * self.num_layers(),
                params.len()
            )));
        }
        for (l, pair) in self.layer_widths.windows(2).enumerate() {
            let (w, b) = (&params[2 * l], &params[2 * l + 1]);
            if w.shape() != [pair[1], pair[0]] || b.shape() != [pair[1]] {
                return Err(OptimError::Dimension(format!(
                    "layer {l}: weight {:?} / bias {:?}, expected [{}, {}] / [{}]",
                    w.shape(),
                    b.shape(),
                    pair[1],
                    pair[0],
                    pair[1]
                )));
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Dataset) -> Result<()> {
        if batch.dim() != self.input_dim() {
            return Err(OptimError::Dimension(format!(
                "batch has {} features, network expects {}",
                batch.dim(),
                self.input_dim()
            )));
        }
        if batch.classes() > self.classes() {
            return Err(OptimError::Dimension(format!(
                "batch has {} classes, network outputs {}",
                batch.classes(),
                self.classes()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// Row-major `B x C` logits.
    pub logits: Vec<f64>,
    /// Row-major `B x C` softmax probabilities.
    pub probs: Vec<f64>,
    /// Summed cross-entropy over the batch.
    pub loss: f64,
}

impl ForwardOutput {
    /// Index of the largest logit for each sample.
    pub fn predictions(&self, classes: usize) -> Vec<usize> {
        self.logits
            .chunks(classes)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
                        if x > best.1 {
                            (i, x)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Summed cross-entropy of probability rows against integer labels.
pub fn cross_entropy(probs: &[f64], labels: &[usize], classes: usize) -> f64 {
    probs
        .chunks(classes)
        .zip(labels)
        .map(|(row, &c)| -row[c].max(PROB_FLOOR).ln())
        .sum()
}

/// Per-layer pre-activations and activations, one `Vec` per layer holding
/// `B x width` row-major values.
struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

fn affine(input: &[f64], rows: usize, w: &ParameterTensor, b: &ParameterTensor) -> Vec<f64> {
    let (out_dim, in_dim) = (w.shape()[0], w.shape()[1]);
    let mut out = vec![0.0; rows * out_dim];
    for r in 0..rows {
        let x = &input[r * in_dim..(r + 1) * in_dim];
        for o in 0..out_dim {
            let wrow = &w.values[o * in_dim..(o + 1) * in_dim];
            out[r * out_dim + o] =
                b.values[o] + wrow.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

fn run_forward(
    spec: &MlpSpec,
    params: &[ParameterTensor],
    batch: &Dataset,
) -> Result<(Trace, ForwardOutput)> {
    spec.validate()?;
    spec.check_params(params)?;
    spec.check_batch(batch)?;
    let rows = batch.len();
    let mut inputs = Vec::with_capacity(spec.num_layers());
    let mut pre = Vec::with_capacity(spec.num_layers());
    let mut current = batch.features().to_vec();
    for l in 0..spec.num_layers() {
        let z = affine(&current, rows, &params[2 * l], &params[2 * l + 1]);
        let next = if l + 1 < spec.num_layers() {
            z.iter().map(|&v| spec.activation.apply(v)).collect()
        } else {
            z.clone()
        };
        inputs.push(std::mem::replace(&mut current, next));
        pre.push(z);
    }
    let classes = spec.classes();
    let probs: Vec<f64> = current.chunks(classes).flat_map(softmax).collect();
    let loss = cross_entropy(&probs, batch.labels(), classes);
    Ok((
        Trace { inputs, pre },
        ForwardOutput {
            logits: current,
            probs,
            loss,
        },
    ))
}

pub fn mlp_forward(
    spec: &MlpSpec,
    params: &[ParameterTensor],
    batch: &Dataset,
) -> Result<ForwardOutput> {
    run_forward(spec, params, batch).map(|(_, out)| out)
}

/// Loss and reverse-mode gradients, one flat buffer per parameter tensor in
/// the same order as `params`.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &[ParameterTensor],
    batch: &Dataset,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let (trace, out) = run_forward(spec, params, batch)?;
    let rows = batch.len();
    let classes = spec.classes();

    // dL/dlogits = p - onehot for each sample (summed loss, so no 1/B)
    let mut delta = out.probs.clone();
    for (r, &c) in batch.labels().iter().enumerate() {
        delta[r * classes + c] -= 1.0;
    }

    let mut grads: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.len()]).collect();
    for l in (0..spec.num_layers()).rev() {
        let w = &params[2 * l];
        let (out_dim, in_dim) = (w.shape()[0], w.shape()[1]);
        let input = &trace.inputs[l];
        let (gw, rest) = grads[2 * l..].split_at_mut(1);
        let (gw, gb) = (&mut gw[0], &mut rest[0]);
        for r in 0..rows {
            let d = &delta[r * out_dim..(r + 1) * out_dim];
            let x = &input[r * in_dim..(r + 1) * in_dim];
            for o in 0..out_dim {
                gb[o] += d[o];
                for i in 0..in_dim {
                    gw[o * in_dim + i] += d[o] * x[i];
                }
            }
        }
        if l > 0 {
            let z_prev = &trace.pre[l - 1];
            let mut prev = vec![0.0; rows * in_dim];
            for r in 0..rows {
                for i in 0..in_dim {
                    let back: f64 = (0..out_dim)
                        .map(|o| w.values[o * in_dim + i] * delta[r * out_dim + o])
                        .sum();
                    prev[r * in_dim + i] =
                        back * spec.activation.derivative(z_prev[r * in_dim + i]);
                }
            }
            delta = prev;
        }
    }
    Ok((out.loss, grads))
}

/// Runs [`mlp_backward`] and stores the gradients in each tensor's `grad`.
pub fn accumulate_gradients(
    spec: &MlpSpec,
    params: &mut [ParameterTensor],
    batch: &Dataset,
) -> Result<f64> {
    let (loss, grads) = mlp_backward(spec, params, batch)?;
    for (p, g) in params.iter_mut().zip(grads) {
        p.grad = g;
    }
    Ok(loss)
}

/// Fraction of rows whose arg-max logit equals the label.
pub fn accuracy(spec: &MlpSpec, params: &[ParameterTensor], data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let out = mlp_forward(spec, params, data)?;
    let hits = out
        .predictions(spec.classes())
        .iter()
        .zip(data.labels())
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / data.len() as f64)
}
