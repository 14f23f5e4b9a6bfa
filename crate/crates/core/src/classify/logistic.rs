use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

use super::{check_inputs, check_width, Classifier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lr: 0.1,
            epochs: 500,
            l2: 1e-3,
            seed: 0,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("logistic.lr", "must be > 0"));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::invalid("logistic.l2", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LogisticModel {
    /// Small Gaussian weights drawn from `seed`, zero bias.
    pub fn init(n_features: usize, seed: u64) -> Self {
        let mut rng = SimRng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.01).expect("valid sd");
        LogisticModel {
            weights: (0..n_features).map(|_| normal.sample(&mut rng)).collect(),
            bias: 0.0,
        }
    }

    fn logits(&self, x: &Array2<f64>) -> Array1<f64> {
        x.dot(&self.weights) + self.bias
    }

    /// Mean cross-entropy plus `l2/2 * |w|^2`.
    pub fn loss(&self, x: &Array2<f64>, y: &[u8], l2: f64) -> f64 {
        let z = self.logits(x);
        let ce: f64 = z.iter().zip(y).map(|(&z, &y)| softplus(z) - y as f64 * z).sum();
        ce / y.len() as f64 + 0.5 * l2 * self.weights.dot(&self.weights)
    }

    /// Gradient of [`Self::loss`] as `(d/dw, d/db)`.
    pub fn gradient(&self, x: &Array2<f64>, y: &[u8], l2: f64) -> (Array1<f64>, f64) {
        let n = y.len() as f64;
        let resid: Array1<f64> = self
            .logits(x)
            .iter()
            .zip(y)
            .map(|(&z, &y)| sigmoid(z) - y as f64)
            .collect();
        let gw = x.t().dot(&resid) / n + l2 * &self.weights;
        (gw, resid.sum() / n)
    }

    /// Weights followed by the bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.to_vec();
        p.push(self.bias);
        p
    }

    pub fn from_params(p: &[f64]) -> Self {
        let (w, b) = p.split_at(p.len() - 1);
        LogisticModel {
            weights: Array1::from(w.to_vec()),
            bias: b[0],
        }
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        check_width(self.weights.len(), x)?;
        Ok(self.logits(x).mapv(sigmoid))
    }
}

/// Full-batch gradient descent on the L2-regularized cross-entropy.
pub fn train_logistic(x: &Array2<f64>, y: &[u8], config: &LogisticConfig) -> Result<LogisticModel> {
    config.validate()?;
    check_inputs(x, y)?;
    let mut model = LogisticModel::init(x.ncols(), config.seed);
    if y.is_empty() {
        return Ok(model);
    }
    for _ in 0..config.epochs {
        let (gw, gb) = model.gradient(x, y, config.l2);
        model.weights.scaled_add(-config.lr, &gw);
        model.bias -= config.lr * gb;
    }
    Ok(model)
}
