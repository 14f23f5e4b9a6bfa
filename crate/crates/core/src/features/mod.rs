//! Price-series ingestion, summary statistics, the two labeling procedures
//! and the leakage-aware train/test split.
//!
//! Index conventions: price `k` is day `k` (0-based). Daily change `j` is
//! `p[j+1] - p[j]`. A dataset row with origin `i` holds changes
//! `[i, i+w-1]` as features and looks ahead over changes `[i+w, i+2w-1]`.

mod dataset;
mod drawdown;
mod series;
mod volatility;

pub use dataset::{
    label_from_events, train_test_split_by_index, IndexRange, LabeledDataset, LeakagePolicy, Split,
};
pub use drawdown::{compute_drawdowns, drawdown_events, label_duration, Drawdown, DurationParams};
pub use series::{load_csv, read_csv, summary_stats, ChangeStats, PriceSeries, SummaryStats};
pub use volatility::{
    crash_days, label_volatility, realized_volatility_series, rv_return_pct, volatility_events, CrashGate,
    RvReturn, VolatilityParams,
};
