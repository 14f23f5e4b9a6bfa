use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

use super::{check_inputs, check_width, Classifier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Softmax,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Tanh => z.mapv(f64::tanh),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Softmax => {
                let mut out = z.clone();
                for mut row in out.rows_mut() {
                    let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - m).exp());
                    let s = row.sum();
                    row /= s;
                }
                out
            }
        }
    }

    /// `dL/dz` from `dL/da` for elementwise activations.
    fn backward(self, z: &Array2<f64>, a: &Array2<f64>, grad_a: Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Tanh => grad_a * a.mapv(|v| 1.0 - v * v),
            Activation::Relu => grad_a * z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            Activation::Softmax => unreachable!("softmax is folded into the loss"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Hidden widths; the activations are tanh, tanh, relu.
    pub widths: Vec<usize>,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            lr: 0.05,
            epochs: 1000,
            widths: vec![32, 16, 8],
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("mlp.lr", "must be > 0"));
        }
        if self.widths.len() != 3 || self.widths.contains(&0) {
            return Err(Error::invalid("mlp.widths", "need three positive hidden widths"));
        }
        Ok(())
    }
}

/// Three hidden layers (tanh, tanh, relu) and a two-way softmax head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

struct Trace {
    /// Layer inputs `a_0 = x, a_1, ..., a_L`.
    acts: Vec<Array2<f64>>,
    /// Pre-activations `z_1, ..., z_L`.
    pre: Vec<Array2<f64>>,
}

pub type LayerGradient = (Array2<f64>, Array1<f64>);

impl MlpModel {
    /// Weights `N(0, 1/fan_in)`, zero biases.
    pub fn init(n_features: usize, widths: &[usize], seed: u64) -> Self {
        let mut rng = SimRng::seed_from_u64(seed);
        let acts = [Activation::Tanh, Activation::Tanh, Activation::Relu];
        let mut dims = vec![n_features];
        dims.extend_from_slice(widths);
        dims.push(2);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, d)| {
                let scale = (1.0 / d[0] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((d[1], d[0]), || {
                        scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                    }),
                    bias: Array1::zeros(d[1]),
                    activation: acts.get(k).copied().unwrap_or(Activation::Softmax),
                }
            })
            .collect();
        MlpModel { layers }
    }

    fn forward(&self, x: &Array2<f64>) -> Trace {
        let mut acts = vec![x.clone()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = acts.last().expect("input").dot(&layer.weights.t()) + &layer.bias;
            acts.push(layer.activation.apply(&z));
            pre.push(z);
        }
        Trace { acts, pre }
    }

    /// Softmax probabilities, `n x 2`.
    pub fn predict_softmax(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_width(self.n_features(), x)?;
        Ok(self.forward(x).acts.pop().expect("output"))
    }

    /// Mean cross-entropy.
    pub fn loss(&self, x: &Array2<f64>, y: &[u8]) -> f64 {
        let logits = self.forward(x).pre.pop().expect("output");
        let total: f64 = logits
            .rows()
            .into_iter()
            .zip(y)
            .map(|(row, &c)| {
                let m = row[0].max(row[1]);
                let lse = m + ((row[0] - m).exp() + (row[1] - m).exp()).ln();
                lse - row[c as usize]
            })
            .sum();
        total / y.len() as f64
    }

    /// Backpropagated `(dW, db)` per layer.
    pub fn gradient(&self, x: &Array2<f64>, y: &[u8]) -> Vec<LayerGradient> {
        let trace = self.forward(x);
        let n = y.len() as f64;
        let mut delta = trace.acts.last().expect("output").clone();
        for (mut row, &c) in delta.rows_mut().into_iter().zip(y) {
            row[c as usize] -= 1.0;
        }
        delta /= n;
        let mut grads = Vec::with_capacity(self.layers.len());
        for k in (0..self.layers.len()).rev() {
            let input = &trace.acts[k];
            grads.push((delta.t().dot(input), delta.sum_axis(Axis(0))));
            if k > 0 {
                let grad_a = delta.dot(&self.layers[k].weights);
                delta = self.layers[k - 1].activation.backward(&trace.pre[k - 1], &trace.acts[k], grad_a);
            }
        }
        grads.reverse();
        grads
    }

    /// All weights (row-major) and biases, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    }

    /// Same architecture with parameters taken from `p`.
    pub fn with_params(&self, p: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = p.iter().copied();
        for l in &mut out.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = it.next().expect("enough params"));
        }
        out
    }

    fn step(&mut self, grads: &[LayerGradient], lr: f64) {
        for (l, (gw, gb)) in self.layers.iter_mut().zip(grads) {
            l.weights.scaled_add(-lr, gw);
            l.bias.scaled_add(-lr, gb);
        }
    }
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        Ok(self.predict_softmax(x)?.column(1).to_owned())
    }
}

/// Full-batch gradient descent with backpropagation.
pub fn train_mlp(x: &Array2<f64>, y: &[u8], config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    check_inputs(x, y)?;
    let mut model = MlpModel::init(x.ncols(), &config.widths, config.seed);
    if y.is_empty() {
        return Ok(model);
    }
    for _ in 0..config.epochs {
        let g = model.gradient(x, y);
        model.step(&g, config.lr);
    }
    Ok(model)
}
