use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class metrics plus `confusion[true][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: [ClassMetrics; 2],
    pub confusion: [[usize; 2]; 2],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(y_true: &[u8], y_pred: &[u8]) -> Result<ClassificationReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut confusion = [[0usize; 2]; 2];
    for (k, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        if t > 1 || p > 1 {
            return Err(Error::Validation {
                row: Some(k),
                message: format!("labels must be 0 or 1, got ({t}, {p})"),
            });
        }
        confusion[t as usize][p as usize] += 1;
    }
    let metrics = |c: usize| {
        let tp = confusion[c][c];
        let predicted = confusion[0][c] + confusion[1][c];
        let support = confusion[c][0] + confusion[c][1];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support,
        }
    };
    Ok(ClassificationReport {
        classes: [metrics(0), metrics(1)],
        confusion,
    })
}

/// Row labels of the tabular report, in order.
pub const REPORT_ROWS: [&str; 8] = [
    "Precision θ=0",
    "Recall θ=0",
    "f1-score θ=0",
    "Support θ=0",
    "Precision θ=1",
    "Recall θ=1",
    "f1-score θ=1",
    "Support θ=1",
];

/// One column per model, eight metric rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub columns: Vec<(String, ClassificationReport)>,
}

impl ReportTable {
    pub fn push(&mut self, name: impl Into<String>, report: ClassificationReport) {
        self.columns.push((name.into(), report));
    }

    /// Cell values as strings: metrics to two decimals, supports as integers.
    pub fn rows(&self) -> Vec<(String, Vec<String>)> {
        REPORT_ROWS
            .iter()
            .enumerate()
            .map(|(r, label)| {
                let cells = self
                    .columns
                    .iter()
                    .map(|(_, rep)| {
                        let m = &rep.classes[r / 4];
                        match r % 4 {
                            0 => format!("{:.2}", m.precision),
                            1 => format!("{:.2}", m.recall),
                            2 => format!("{:.2}", m.f1),
                            _ => m.support.to_string(),
                        }
                    })
                    .collect();
                (label.to_string(), cells)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::from("metric")];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header)?;
        for (label, cells) in self.rows() {
            let mut rec = vec![label];
            rec.extend(cells);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 1, 0, 1];
        let r = classification_report(&y, &y).unwrap();
        for m in r.classes {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.classes[0].support + r.classes[1].support, 5);
    }

    #[test]
    fn hand_counted_fixture() {
        let r = classification_report(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        let c1 = r.classes[1];
        assert!((c1.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c1.recall, 1.0);
        assert!((c1.f1 - 0.8).abs() < 1e-15);
        assert_eq!(c1.support, 2);
        let c0 = r.classes[0];
        assert_eq!((c0.precision, c0.recall, c0.support), (1.0, 0.5, 2));
        assert!((c0.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion, [[1, 1], [0, 2]]);
    }

    #[test]
    fn constant_zero_predictor() {
        let r = classification_report(&[0, 1, 1, 0], &[0; 4]).unwrap();
        assert_eq!((r.classes[1].precision, r.classes[1].recall, r.classes[1].f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            classification_report(&[0, 1], &[0]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn table_layout() {
        let mut t = ReportTable::default();
        let r = classification_report(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap();
        t.push("LR", r);
        t.push("MLP", r);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "metric,LR,MLP");
        assert_eq!(lines[5], "Precision θ=1,0.67,0.67");
        assert_eq!(lines[8], "Support θ=1,2,2");
    }
}
