//! JSON configuration for the `bns` binary. Every section has defaults, so
//! `{}` is a valid file; unknown keys are rejected.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::features::IndexRange;
use crate::hedging::{EuropeanOption, HedgeSetup, OptionKind, StableAssetParams, Strategy};
use crate::levy::SubordinatorSpec;
use crate::model::{DriftMode, ModelParams, Subordinators};
use crate::pipeline::{Approach, ExperimentSpec};
use crate::varswap::VarSwapContract;

/// Seed used when neither the command line, the config nor `BNS_SEED` sets one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub n_paths: usize,
    pub n_steps: usize,
    /// How many individual paths to write as CSV.
    pub write_paths: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n_paths: 10_000,
            n_steps: 252,
            write_paths: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceSection {
    /// Also estimate the price by Monte Carlo.
    pub monte_carlo: bool,
    pub n_paths: usize,
    pub n_steps: usize,
}

impl Default for PriceSection {
    fn default() -> Self {
        PriceSection {
            monte_carlo: false,
            n_paths: 100_000,
            n_steps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HedgeSection {
    pub n_paths: usize,
    pub n_steps: usize,
    pub strategies: Vec<Strategy>,
    /// Hedger `theta` values compared against the configured world; empty
    /// skips the comparison.
    pub compare_thetas: Vec<f64>,
}

impl Default for HedgeSection {
    fn default() -> Self {
        HedgeSection {
            n_paths: 10_000,
            n_steps: 100,
            strategies: vec![Strategy::Optimal, Strategy::Perturbed(0.9), Strategy::Perturbed(1.1), Strategy::Zero],
            compare_thetas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// `date,price` CSV; when absent a synthetic series is simulated.
    pub input: Option<PathBuf>,
    pub synthetic_days: usize,
    pub synthetic_start: NaiveDate,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            input: None,
            synthetic_days: 600,
            synthetic_start: NaiveDate::from_ymd_opt(2012, 4, 4).expect("valid date"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentHedgeSection {
    /// Compare hedging with `theta = 0` against the predicted `theta`.
    pub enabled: bool,
    pub n_paths: usize,
    pub n_steps: usize,
}

impl Default for ExperimentHedgeSection {
    fn default() -> Self {
        ExperimentHedgeSection {
            enabled: true,
            n_paths: 2_000,
            n_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub model: ModelParams,
    pub subordinators: Subordinators,
    pub stable: StableAssetParams,
    pub option: EuropeanOption,
    pub contract: VarSwapContract,
    pub simulate: SimulateSection,
    pub price: PriceSection,
    pub hedge: HedgeSection,
    pub data: DataSection,
    pub experiment: ExperimentSpec,
    pub experiment_hedge: ExperimentHedgeSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: None,
            out_dir: PathBuf::from("out"),
            model: ModelParams {
                rho: -1.0,
                lambda: 1.5,
                theta: 0.5,
                r: 0.02,
                sigma0_sq: 0.04,
                s0: 100.0,
                horizon_t: 1.0,
                drift_mode: DriftMode::Compensated,
            },
            subordinators: Subordinators::new(
                SubordinatorSpec::new(2.0, 40.0).expect("valid"),
                SubordinatorSpec::new(3.0, 15.0).expect("valid"),
            ),
            stable: StableAssetParams {
                sigma: 0.25,
                rho_prime: 0.6,
                y0: 100.0,
            },
            option: EuropeanOption {
                strike: 100.0,
                kind: OptionKind::Call,
            },
            contract: VarSwapContract {
                strike_kvar: 0.05,
                notional: 1.0,
            },
            simulate: SimulateSection::default(),
            price: PriceSection::default(),
            hedge: HedgeSection::default(),
            data: DataSection::default(),
            experiment: ExperimentSpec::new(Approach::Volatility, IndexRange::new(200, 300), IndexRange::new(301, 320)),
            experiment_hedge: ExperimentHedgeSection::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Applies `key.path=value` overrides. Values are parsed as JSON, falling
    /// back to a plain string.
    pub fn with_overrides(self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut tree = serde_json::to_value(&self)?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(item.clone(), "override must look like key.path=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut tree;
            for part in key.split('.') {
                node = match node {
                    Value::Object(map) if map.contains_key(part) => map.get_mut(part).expect("present"),
                    _ => return Err(Error::invalid(key, "unknown configuration key")),
                };
            }
            *node = value;
        }
        Ok(serde_json::from_value(tree)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.subordinators.validate()?;
        self.stable.validate()?;
        self.option.validate()?;
        self.contract.validate()?;
        self.experiment.validate()?;
        for (field, n) in [
            ("simulate.n_paths", self.simulate.n_paths),
            ("simulate.n_steps", self.simulate.n_steps),
            ("price.n_steps", self.price.n_steps),
            ("hedge.n_steps", self.hedge.n_steps),
            ("experiment_hedge.n_steps", self.experiment_hedge.n_steps),
        ] {
            if n == 0 {
                return Err(Error::invalid(field, "must be >= 1"));
            }
        }
        if self.price.monte_carlo && self.price.n_paths < 2 {
            return Err(Error::invalid("price.n_paths", "must be >= 2"));
        }
        Ok(())
    }

    pub fn hedge_setup(&self) -> HedgeSetup {
        HedgeSetup {
            params: self.model,
            subs: self.subordinators,
            stable: self.stable,
            option: self.option,
            contract: self.contract,
        }
    }
}

/// Command line beats config, config beats `BNS_SEED`, which beats
/// [`DEFAULT_SEED`].
pub fn resolve_seed(cli: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = cli.or(config) {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::invalid("BNS_SEED", format!("not an unsigned integer: {v:?}"))),
        None => Ok(DEFAULT_SEED),
    }
}
