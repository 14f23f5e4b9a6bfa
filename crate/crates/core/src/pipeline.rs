//! End-to-end experiments: label a series, split it, train and report each
//! classifier, summarize the predictions as a single `theta`, and compare
//! hedging errors across candidate values of `theta`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classification_report, predict, train_logistic, train_mlp, ClassificationReport, Classifier, LogisticConfig,
    MlpConfig, Model, ModelKind, ReportTable, Standardizer, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::features::{
    label_duration, label_volatility, train_test_split_by_index, DurationParams, IndexRange, LabeledDataset,
    LeakagePolicy, PriceSeries, VolatilityParams,
};
use crate::hedging::{hedging_errors, HedgeSetup, Strategy};
use crate::stats::{McEstimate, VarianceGap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Volatility,
    Duration,
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Lr, ModelKind::Mlp]
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub approach: Approach,
    pub train: IndexRange,
    pub test: IndexRange,
    #[serde(default)]
    pub leakage: LeakagePolicy,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub volatility: VolatilityParams,
    #[serde(default)]
    pub duration: DurationParams,
    #[serde(default)]
    pub logistic: LogisticConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Z-score features with statistics of the training rows.
    #[serde(default = "yes")]
    pub standardize: bool,
    /// Seeds both classifiers; overrides their own `seed` fields.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(approach: Approach, train: IndexRange, test: IndexRange) -> Self {
        ExperimentSpec {
            approach,
            train,
            test,
            leakage: LeakagePolicy::default(),
            models: default_models(),
            volatility: VolatilityParams::default(),
            duration: DurationParams::default(),
            logistic: LogisticConfig::default(),
            mlp: MlpConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            standardize: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::EmptyModelSet);
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid("experiment.threshold", "must lie in [0, 1]"));
        }
        self.volatility.validate()?;
        self.duration.validate()?;
        self.logistic.validate()?;
        self.mlp.validate()
    }

    pub fn label(&self, series: &PriceSeries) -> Result<LabeledDataset> {
        match self.approach {
            Approach::Volatility => label_volatility(series, &self.volatility),
            Approach::Duration => label_duration(series, &self.duration),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub kind: ModelKind,
    pub report: ClassificationReport,
    pub macro_f1: f64,
    /// Class-1 probability per test row.
    pub probabilities: Vec<f64>,
    pub predictions: Vec<u8>,
    pub positive_fraction: f64,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub train_rows: usize,
    pub test_rows: usize,
    pub purged_rows: usize,
    pub test_origins: Vec<usize>,
    pub outcomes: Vec<ModelOutcome>,
    pub best_model: ModelKind,
    /// Fraction of test rows the best model labels 1.
    pub predicted_theta: f64,
}

impl ExperimentOutput {
    pub fn table(&self) -> ReportTable {
        let mut t = ReportTable::default();
        for o in &self.outcomes {
            t.push(o.kind.label(), o.report);
        }
        t
    }
}

fn fit(kind: ModelKind, x: &Array2<f64>, y: &[u8], spec: &ExperimentSpec) -> Result<Model> {
    Ok(match kind {
        ModelKind::Lr => Model::Lr(train_logistic(
            x,
            y,
            &LogisticConfig {
                seed: spec.seed,
                ..spec.logistic
            },
        )?),
        ModelKind::Mlp => Model::Mlp(train_mlp(
            x,
            y,
            &MlpConfig {
                seed: spec.seed,
                ..spec.mlp.clone()
            },
        )?),
    })
}

/// Trains every requested model on the training range and reports on the
/// test range. The best model maximizes the macro-averaged f1; ties go to
/// the model listed first.
pub fn run_experiment(spec: &ExperimentSpec, series: &PriceSeries) -> Result<ExperimentOutput> {
    spec.validate()?;
    evaluate_dataset(spec, &spec.label(series)?)
}

/// [`run_experiment`] on an already labeled dataset.
pub fn evaluate_dataset(spec: &ExperimentSpec, dataset: &LabeledDataset) -> Result<ExperimentOutput> {
    spec.validate()?;
    let split = train_test_split_by_index(dataset, spec.train, spec.test, spec.leakage)?;
    let (x_train, x_test) = if spec.standardize {
        let s = Standardizer::fit(&split.train.features);
        (s.transform(&split.train.features)?, s.transform(&split.test.features)?)
    } else {
        (split.train.features.clone(), split.test.features.clone())
    };
    let y_train = &split.train.targets;
    let y_test = &split.test.targets;

    let outcomes = spec
        .models
        .par_iter()
        .map(|&kind| {
            let model = fit(kind, &x_train, y_train, spec)?;
            let probabilities = model.predict_proba(&x_test)?.to_vec();
            let predictions = predict(&model, &x_test, spec.threshold)?;
            let report = classification_report(y_test, &predictions)?;
            let positive_fraction = if predictions.is_empty() {
                0.0
            } else {
                predictions.iter().map(|&p| p as f64).sum::<f64>() / predictions.len() as f64
            };
            Ok(ModelOutcome {
                kind,
                report,
                macro_f1: 0.5 * (report.classes[0].f1 + report.classes[1].f1),
                probabilities,
                predictions,
                positive_fraction,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let best = outcomes
        .iter()
        .fold(&outcomes[0], |best, o| if o.macro_f1 > best.macro_f1 { o } else { best });
    Ok(ExperimentOutput {
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        purged_rows: split.purged,
        test_origins: split.test.origin_index.clone(),
        best_model: best.kind,
        predicted_theta: best.positive_fraction,
        outcomes,
    })
}

/// One row of the hedging comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeComparisonRow {
    /// `theta` used by the hedger.
    pub theta: f64,
    pub error: McEstimate,
    /// `Var(eps | this theta) - Var(eps | best theta)`, paired.
    pub gap_to_best: VarianceGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeComparison {
    pub world_theta: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub best_theta: f64,
    pub rows: Vec<HedgeComparisonRow>,
}

/// Hedges a world with fixed `theta*` (taken from `world.params.theta`)
/// using each candidate `theta` in the hedge ratio. All candidates see the
/// same simulated paths.
pub fn compare_hedging(
    world: &HedgeSetup,
    candidates: &[f64],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<HedgeComparison> {
    if candidates.is_empty() {
        return Err(Error::invalid("compare.candidates", "need at least one theta"));
    }
    if let Some(bad) = candidates.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::invalid("compare.candidates", format!("theta {bad} outside [0, 1]")));
    }
    let errors = candidates
        .iter()
        .map(|&theta| hedging_errors(world, &world.with_theta(theta), n_steps, n_paths, seed, Strategy::Optimal))
        .collect::<Result<Vec<_>>>()?;
    let estimates: Vec<McEstimate> = errors.iter().map(|e| McEstimate::from_samples(e)).collect();
    let best = (0..candidates.len())
        .min_by(|&a, &b| estimates[a].variance.total_cmp(&estimates[b].variance))
        .expect("non-empty");
    let rows = candidates
        .iter()
        .zip(&errors)
        .zip(&estimates)
        .map(|((&theta, e), &est)| HedgeComparisonRow {
            theta,
            error: est,
            gap_to_best: VarianceGap::paired(e, &errors[best]),
        })
        .collect();
    Ok(HedgeComparison {
        world_theta: world.params.theta,
        n_paths,
        n_steps,
        seed,
        best_theta: candidates[best],
        rows,
    })
}
