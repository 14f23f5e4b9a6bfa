use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::check_width;

/// Per-column z-score fitted on training data. Constant columns are centred
/// but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let var = x
            .rows()
            .into_iter()
            .fold(Array1::zeros(x.ncols()), |acc, row| acc + (&row - &mean).mapv(|d| d * d))
            / n;
        let scale = var.mapv(|v: f64| if v > 0.0 { v.sqrt() } else { 1.0 });
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_width(self.mean.len(), x)?;
        Ok((x - &self.mean) / &self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn standardizes_training_columns() {
        let x = array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]];
        let s = Standardizer::fit(&x);
        let z = s.transform(&x).unwrap();
        assert!(z.column(0).sum().abs() < 1e-12);
        assert!((z.column(0).mapv(|v| v * v).sum() / 3.0 - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn width_is_checked() {
        let s = Standardizer::fit(&array![[1.0, 2.0]]);
        assert!(s.transform(&array![[1.0]]).is_err());
    }
}
