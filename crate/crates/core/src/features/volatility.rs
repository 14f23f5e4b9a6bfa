use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile;

use super::{label_from_events, LabeledDataset, PriceSeries};

/// Gate a rolling-window maximum of the rv returns must clear before its day
/// is flagged crash-like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashGate {
    /// Quantile (linear interpolation) of all rv returns of the series.
    /// `Quantile(0.0)` flags every window maximum.
    Quantile(f64),
    /// Fixed threshold in percent.
    Absolute(f64),
}

impl Default for CrashGate {
    fn default() -> Self {
        CrashGate::Quantile(0.9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolatilityParams {
    /// Realized-volatility window, rolling-maximum window and dataset width.
    pub window: usize,
    pub gate: CrashGate,
}

impl Default for VolatilityParams {
    fn default() -> Self {
        VolatilityParams {
            window: 20,
            gate: CrashGate::default(),
        }
    }
}

impl VolatilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("volatility.window", "must be >= 1"));
        }
        match self.gate {
            CrashGate::Quantile(q) if !(0.0..=1.0).contains(&q) => {
                Err(Error::invalid("volatility.gate.quantile", "must lie in [0, 1]"))
            }
            CrashGate::Absolute(x) if !x.is_finite() => Err(Error::invalid("volatility.gate.absolute", "must be finite")),
            _ => Ok(()),
        }
    }
}

/// `(day, rv)` with `rv_i = sqrt(sum of squared log returns over days i-window+1..=i)`,
/// starting at day `window`.
pub fn realized_volatility_series(series: &PriceSeries, window: usize) -> Result<Vec<(usize, f64)>> {
    if window == 0 {
        return Err(Error::invalid("window", "must be >= 1"));
    }
    if series.len() < window + 1 {
        return Err(Error::SeriesTooShort {
            needed: window + 1,
            got: series.len(),
        });
    }
    let sq: Vec<f64> = series.log_returns().iter().map(|r| r * r).collect();
    Ok((window..series.len())
        .map(|i| (i, sq[i - window..i].iter().sum::<f64>().sqrt()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvReturn {
    pub day: usize,
    pub pct: f64,
    /// Previous rv was zero; `pct` was set to 0.
    pub zero_base: bool,
}

/// Percentage change of consecutive rv values.
pub fn rv_return_pct(rv: &[(usize, f64)]) -> Result<Vec<RvReturn>> {
    if rv.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: rv.len() });
    }
    Ok(rv
        .windows(2)
        .map(|w| {
            let (prev, (day, cur)) = (w[0].1, w[1]);
            if prev == 0.0 {
                RvReturn {
                    day,
                    pct: 0.0,
                    zero_base: true,
                }
            } else {
                RvReturn {
                    day,
                    pct: (cur - prev) / prev * 100.0,
                    zero_base: false,
                }
            }
        })
        .collect())
}

fn check_length(series: &PriceSeries, window: usize) -> Result<()> {
    let needed = 2 * window + 1;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    Ok(())
}

/// Days flagged crash-like (`V = 1`), ascending.
pub fn crash_days(series: &PriceSeries, params: &VolatilityParams) -> Result<Vec<usize>> {
    params.validate()?;
    check_length(series, params.window)?;
    let rvr = rv_return_pct(&realized_volatility_series(series, params.window)?)?;
    let pct: Vec<f64> = rvr.iter().map(|r| r.pct).collect();
    let gate = match params.gate {
        CrashGate::Quantile(q) => quantile(&pct, q),
        CrashGate::Absolute(x) => x,
    };
    let mut flagged = vec![false; pct.len()];
    for (start, w) in pct.windows(params.window).enumerate() {
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max >= gate {
            for (k, &x) in w.iter().enumerate() {
                if x == max {
                    flagged[start + k] = true;
                }
            }
        }
    }
    Ok(rvr
        .iter()
        .zip(flagged)
        .filter_map(|(r, f)| f.then_some(r.day))
        .collect())
}

/// Crash-like days mapped onto change positions: day `k` is change `k - 1`.
pub fn volatility_events(series: &PriceSeries, params: &VolatilityParams) -> Result<Vec<usize>> {
    let mut events = vec![0; series.len() - 1];
    for day in crash_days(series, params)? {
        events[day - 1] = 1;
    }
    Ok(events)
}

/// `theta = 1` for rows whose look-ahead contains at least one crash-like day.
pub fn label_volatility(series: &PriceSeries, params: &VolatilityParams) -> Result<LabeledDataset> {
    let events = volatility_events(series, params)?;
    label_from_events(series, params.window, &events, 1)
}
