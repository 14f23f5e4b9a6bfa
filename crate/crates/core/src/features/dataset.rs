use std::io::{Read, Write};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::PriceSeries;

/// Sliding-window dataset: each row holds `w` consecutive daily changes and
/// a binary target describing the following `w` changes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub window_w: usize,
    pub origin_index: Vec<usize>,
    pub features: Array2<f64>,
    pub targets: Vec<u8>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.targets.iter().map(|&t| t as f64).sum::<f64>() / self.len() as f64
    }

    /// Rows whose position satisfies `keep`.
    fn select(&self, keep: impl Fn(usize) -> bool) -> LabeledDataset {
        let rows: Vec<usize> = (0..self.len()).filter(|&r| keep(self.origin_index[r])).collect();
        LabeledDataset {
            window_w: self.window_w,
            origin_index: rows.iter().map(|&r| self.origin_index[r]).collect(),
            features: self.features.select(ndarray::Axis(0), &rows),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
        }
    }

    /// CSV with header `origin_index,f1..fw,theta`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["origin_index".to_string()];
        header.extend((1..=self.window_w).map(|k| format!("f{k}")));
        header.push("theta".into());
        w.write_record(&header)?;
        for (r, row) in self.features.outer_iter().enumerate() {
            let mut rec = vec![self.origin_index[r].to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            rec.push(self.targets[r].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let width = header.len();
        if width < 3 || &header[0] != "origin_index" || &header[width - 1] != "theta" {
            return Err(Error::Parse {
                row: 1,
                message: "expected header origin_index,f1..fw,theta".into(),
            });
        }
        let w = width - 2;
        let mut origin_index = Vec::new();
        let mut values = Vec::new();
        let mut targets = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::Parse {
                row: line,
                message: e.to_string(),
            })?;
            let bad = |m: String| Error::Parse { row: line, message: m };
            origin_index.push(rec[0].parse().map_err(|_| bad(format!("bad origin_index {:?}", &rec[0])))?);
            for field in rec.iter().skip(1).take(w) {
                values.push(field.parse::<f64>().map_err(|_| bad(format!("bad feature {field:?}")))?);
            }
            targets.push(match &rec[width - 1] {
                "0" => 0,
                "1" => 1,
                t => return Err(bad(format!("theta must be 0 or 1, got {t:?}"))),
            });
        }
        let features = Array2::from_shape_vec((targets.len(), w), values).map_err(|e| Error::ShapeMismatch {
            expected: format!("{} x {w}", targets.len()),
            got: e.to_string(),
        })?;
        Ok(LabeledDataset {
            window_w: w,
            origin_index,
            features,
            targets,
        })
    }
}

/// Builds the dataset from per-change event counts: row `i` gets `theta = 1`
/// iff at least `min_count` events sit at change positions `[i+w, i+2w-1]`.
pub fn label_from_events(series: &PriceSeries, w: usize, events: &[usize], min_count: usize) -> Result<LabeledDataset> {
    if w == 0 {
        return Err(Error::invalid("window", "must be >= 1"));
    }
    let changes = series.daily_changes();
    if events.len() != changes.len() {
        return Err(Error::LengthMismatch {
            left: events.len(),
            right: changes.len(),
        });
    }
    if changes.len() < 2 * w {
        return Err(Error::SeriesTooShort {
            needed: 2 * w + 1,
            got: series.len(),
        });
    }
    let rows = changes.len() - 2 * w + 1;
    let all = ndarray::ArrayView1::from(&changes[..]);
    let mut features = Array2::zeros((rows, w));
    let mut targets = Vec::with_capacity(rows);
    for i in 0..rows {
        features.row_mut(i).assign(&all.slice(s![i..i + w]));
        let count: usize = events[i + w..i + 2 * w].iter().sum();
        targets.push(u8::from(count >= min_count));
    }
    Ok(LabeledDataset {
        window_w: w,
        origin_index: (0..rows).collect(),
        features,
        targets,
    })
}

/// Inclusive range of origin indices. `start > end` denotes an empty range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        IndexRange { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

/// What to do with training rows whose look-ahead reaches the test range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakagePolicy {
    /// Drop them from the training set.
    #[default]
    Purge,
    /// Fail with [`Error::Overlap`].
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Training rows dropped because their look-ahead overlapped the test range.
    pub purged: usize,
}

/// Assigns rows by origin index. Training row `i` looks ahead through change
/// `i + 2w - 1`, which must precede the first test change `test.start`.
pub fn train_test_split_by_index(
    dataset: &LabeledDataset,
    train: IndexRange,
    test: IndexRange,
    policy: LeakagePolicy,
) -> Result<Split> {
    if !train.is_empty() && !test.is_empty() && train.end >= test.start {
        return Err(Error::Overlap(format!(
            "train {}..={} must end before test {}..={} begins",
            train.start, train.end, test.start, test.end
        )));
    }
    let w = dataset.window_w;
    let leaks = |i: usize| !test.is_empty() && i + 2 * w > test.start;
    let selected = dataset.select(|i| train.contains(i));
    let purged = selected.origin_index.iter().filter(|&&i| leaks(i)).count();
    if purged > 0 && policy == LeakagePolicy::Reject {
        return Err(Error::Overlap(format!(
            "{purged} training rows look ahead into the test range starting at {}",
            test.start
        )));
    }
    Ok(Split {
        train: selected.select(|i| !leaks(i)),
        test: dataset.select(|i| test.contains(i)),
        purged,
    })
}
