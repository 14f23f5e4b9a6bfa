//! Logistic regression and a small MLP trained by full-batch gradient
//! descent, thresholded predictions, and the per-class report.

mod logistic;
mod mlp;
mod report;
mod scaler;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use mlp::{train_mlp, Activation, DenseLayer, MlpConfig, MlpModel};
pub use report::{classification_report, ClassMetrics, ClassificationReport, ReportTable, REPORT_ROWS};
pub use scaler::Standardizer;

/// Decision threshold on the class-1 probability.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

pub trait Classifier {
    fn n_features(&self) -> usize;

    /// Probability of class 1 for each row.
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array1<f64>>;
}

/// Class 1 iff the probability is strictly greater than `threshold`.
pub fn threshold_labels(proba: &[f64], threshold: f64) -> Vec<u8> {
    proba.iter().map(|&p| u8::from(p > threshold)).collect()
}

pub fn predict<C: Classifier + ?Sized>(model: &C, x: &Array2<f64>, threshold: f64) -> Result<Vec<u8>> {
    Ok(threshold_labels(model.predict_proba(x)?.as_slice().expect("contiguous"), threshold))
}

pub(crate) fn check_inputs(x: &Array2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", x.nrows()),
            got: format!("{} labels", y.len()),
        });
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Validation {
            row: y.iter().position(|v| v == bad),
            message: format!("labels must be 0 or 1, got {bad}"),
        });
    }
    Ok(())
}

pub(crate) fn check_width(expected: usize, x: &Array2<f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{expected} features"),
            got: format!("{} features", x.ncols()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Mlp,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Mlp => "MLP",
        }
    }
}

/// A trained model of either kind, serializable to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Lr(LogisticModel),
    Mlp(MlpModel),
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        match self {
            Model::Lr(m) => m.n_features(),
            Model::Mlp(m) => m.n_features(),
        }
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        match self {
            Model::Lr(m) => m.predict_proba(x),
            Model::Mlp(m) => m.predict_proba(x),
        }
    }
}

/// Relative error `|a - b| / max(|a|, |b|)` of two gradient vectors, 0 when
/// both vanish.
pub fn gradient_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Central finite-difference gradient of `f` at `params`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p);
            p[k] = orig - h;
            let dn = f(&p);
            p[k] = orig;
            (up - dn) / (2.0 * h)
        })
        .collect()
}
