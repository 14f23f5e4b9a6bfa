use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{label_from_events, LabeledDataset, PriceSeries};

/// Maximal strictly decreasing run `p[start] > ... > p[end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drawdown {
    pub start_index: usize,
    pub end_index: usize,
    /// `(p_min - p_max) / p_max`, always negative.
    pub depth: f64,
    /// Number of down steps, `end_index - start_index`.
    pub duration: usize,
}

/// All maximal strictly decreasing runs, in order. Equal consecutive prices
/// end a run. A run that starts on the first day or ends on the last day is
/// kept; a trailing maximum with no decline after it yields nothing.
pub fn compute_drawdowns(series: &PriceSeries) -> Vec<Drawdown> {
    let p = series.prices();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < p.len() {
        if p[i + 1] < p[i] {
            let mut j = i + 1;
            while j + 1 < p.len() && p[j + 1] < p[j] {
                j += 1;
            }
            out.push(Drawdown {
                start_index: i,
                end_index: j,
                depth: (p[j] - p[i]) / p[i],
                duration: j - i,
            });
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DurationParams {
    pub window: usize,
    /// Minimum drawdown duration `D` in days.
    pub min_duration: usize,
    /// Drawdowns of duration `>= D` needed in a look-ahead window.
    pub min_count: usize,
}

impl Default for DurationParams {
    fn default() -> Self {
        DurationParams {
            window: 10,
            min_duration: 2,
            min_count: 2,
        }
    }
}

impl DurationParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid("duration.window", "must be >= 1"));
        }
        if self.min_duration == 0 {
            return Err(Error::invalid("duration.min_duration", "must be >= 1"));
        }
        if self.min_count == 0 {
            return Err(Error::invalid("duration.min_count", "must be >= 1"));
        }
        Ok(())
    }
}

/// Number of qualifying drawdowns starting at each change position.
pub fn drawdown_events(series: &PriceSeries, min_duration: usize) -> Vec<usize> {
    let mut events = vec![0; series.len() - 1];
    for d in compute_drawdowns(series) {
        if d.duration >= min_duration {
            events[d.start_index] += 1;
        }
    }
    events
}

/// `theta = 1` for rows whose look-ahead holds at least `min_count`
/// drawdown starts with duration `>= min_duration`.
pub fn label_duration(series: &PriceSeries, params: &DurationParams) -> Result<LabeledDataset> {
    params.validate()?;
    let events = drawdown_events(series, params.min_duration);
    label_from_events(series, params.window, &events, params.min_count)
}
