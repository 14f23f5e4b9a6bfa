use std::io::Read;
use std::path::Path;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::median;

/// Daily closing prices on strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: prices.len(),
            });
        }
        if prices.len() < 2 {
            return Err(Error::SeriesTooShort {
                needed: 2,
                got: prices.len(),
            });
        }
        for (k, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Validation {
                    row: Some(k),
                    message: format!("price must be positive, got {p}"),
                });
            }
        }
        for (k, w) in dates.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Validation {
                    row: Some(k + 1),
                    message: format!("dates must be strictly increasing ({} then {})", w[0], w[1]),
                });
            }
        }
        Ok(PriceSeries { dates, prices })
    }

    /// Series on consecutive calendar days starting 2000-01-01.
    pub fn from_prices(prices: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..prices.len() as u64)
            .map(|k| start.checked_add_days(Days::new(k)).expect("date in range"))
            .collect();
        Self::new(dates, prices)
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// `p[j+1] - p[j]` for `j = 0..n-1`.
    pub fn daily_changes(&self) -> Vec<f64> {
        self.prices.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Percentage changes `(p[j+1] - p[j]) / p[j] * 100`.
    pub fn pct_changes(&self) -> Vec<f64> {
        self.prices.windows(2).map(|w| (w[1] - w[0]) / w[0] * 100.0).collect()
    }

    pub fn log_returns(&self) -> Vec<f64> {
        self.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "price"])?;
        for (d, p) in self.dates.iter().zip(&self.prices) {
            w.write_record([d.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a `date,price` CSV with a header row. Error rows are 1-based file
/// line numbers, the header being line 1.
pub fn read_csv<R: Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dates = Vec::new();
    let mut prices = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: line,
            message: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row: line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            row: line,
            message: format!("bad date {:?}: {e}", &rec[0]),
        })?;
        let price: f64 = rec[1].parse().map_err(|_| Error::Parse {
            row: line,
            message: format!("non-numeric price {:?}", &rec[1]),
        })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(Error::Validation {
                row: Some(line),
                message: format!("price must be positive, got {price}"),
            });
        }
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(Error::Validation {
                    row: Some(line),
                    message: format!("dates must be strictly increasing ({prev} then {date})"),
                });
            }
        }
        dates.push(date);
        prices.push(price);
    }
    PriceSeries::new(dates, prices)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    read_csv(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

impl ChangeStats {
    fn of(xs: &[f64]) -> Self {
        ChangeStats {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            median: median(xs),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub daily_change: ChangeStats,
    pub daily_pct_change: ChangeStats,
}

pub fn summary_stats(series: &PriceSeries) -> SummaryStats {
    SummaryStats {
        daily_change: ChangeStats::of(&series.daily_changes()),
        daily_pct_change: ChangeStats::of(&series.pct_changes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_valid_file() {
        let s = read_csv("date,price\n2012-04-04,95.1\n2012-04-05,96.0\n2012-04-09,94.2\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.prices(), &[95.1, 96.0, 94.2]);
    }

    #[test]
    fn negative_price_names_the_row() {
        let err = read_csv("date,price\n2012-04-04,95.1\n2012-04-05,-1.0\n".as_bytes()).unwrap_err();
        match err {
            Error::Validation { row: Some(3), .. } => {}
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let err = read_csv("date,price\n2012-04-04,95.1\n2012-04-04,96.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation { row: Some(3), .. }));
    }

    #[test]
    fn non_numeric_price_is_a_parse_error() {
        let err = read_csv("date,price\n2012-04-04,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = read_csv("date,price\n04/04/2012,1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn flat_prices_have_zero_stats() {
        let s = summary_stats(&PriceSeries::from_prices(vec![100.0; 3]).unwrap());
        for c in [s.daily_change, s.daily_pct_change] {
            assert_eq!([c.mean, c.median, c.max, c.min], [0.0; 4]);
        }
    }

    #[test]
    fn small_example() {
        let s = summary_stats(&PriceSeries::from_prices(vec![100.0, 110.0, 99.0]).unwrap());
        assert_eq!(s.daily_change.mean, -0.5);
        assert_eq!(s.daily_change.max, 10.0);
        assert_eq!(s.daily_change.min, -11.0);
        assert_eq!(s.daily_pct_change.max, 10.0);
        assert!((s.daily_pct_change.min + 10.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let s = PriceSeries::from_prices(vec![1.5, 2.25, 0.75]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), s);
    }
}
