use crate::error::{Error, Result};

/// Winsorization threshold on normalized intensities used unless configured otherwise.
pub const DEFAULT_THRESHOLD: f64 = 1e-2;

/// Inverse-intensity weights normalized to sum to `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub threshold: f64,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector { weights: vec![1.0; n], threshold: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Normalize intensities to sum to `n`, raise those below `threshold` to it,
/// invert, and normalize the inverses to sum to `n`.
pub fn weights_from_intensity(intensity: &[f64], threshold: f64) -> Result<WeightVector> {
    let n = intensity.len();
    if n == 0 {
        return Err(Error::InvalidInput("no intensities".into()));
    }
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {threshold}")));
    }
    if intensity.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("intensities must be positive and finite".into()));
    }
    if intensity.iter().all(|v| *v == intensity[0]) {
        return Ok(WeightVector { weights: vec![1.0; n], threshold });
    }
    let nf = n as f64;
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    let floor = super::INTENSITY_FLOOR * max;
    let total: f64 = intensity.iter().map(|v| v.max(floor)).sum();
    let inverses: Vec<f64> = intensity
        .iter()
        .map(|v| 1.0 / (nf * v.max(floor) / total).max(threshold))
        .collect();
    let inv_total: f64 = inverses.iter().sum();
    let weights: Vec<f64> = inverses.iter().map(|v| nf * v / inv_total).collect();
    Ok(WeightVector { weights, threshold })
}
