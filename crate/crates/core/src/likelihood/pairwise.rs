//! Pairwise-marginal composite likelihood `Σ_{i<j} ω_ij log f(y_i, y_j)`
//! with `ω_ij = 1` or `w_i w_j`.

use super::LN_2PI;
use crate::error::{Error, Result};
use crate::model::{Dataset, MaternKernel, ModelParams};

#[derive(Debug, Clone)]
pub struct PairwiseLikelihood<'a> {
    data: &'a Dataset,
    /// `(i, j, distance, ω_ij)` for every pair within the cutoff.
    pairs: Vec<(usize, usize, f64, f64)>,
}

impl<'a> PairwiseLikelihood<'a> {
    pub fn new(data: &'a Dataset, weights: Option<&[f64]>, cutoff: Option<f64>) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidInput("pairwise likelihood needs at least 2 observations".into()));
        }
        let locs = data.locations();
        let limit = cutoff.unwrap_or(f64::INFINITY);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let h = locs[i].dist(&locs[j]);
                if h <= limit {
                    let w = weights.map_or(1.0, |w| w[i] * w[j]);
                    pairs.push((i, j, h, w));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::NoPairs);
        }
        Ok(PairwiseLikelihood { data, pairs })
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn nll(&self, psi: &ModelParams) -> Result<f64> {
        let kernel = MaternKernel::new(psi.theta.nu);
        let (s2, phi) = (psi.theta.sigma2, psi.theta.phi);
        let v = s2 + psi.tau2;
        let y = self.data.values();
        let mut total = 0.0;
        for &(i, j, h, w) in &self.pairs {
            let c = kernel.cov(h, s2, phi);
            let det = v * v - c * c;
            if !(det > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: 1 });
            }
            let (a, b) = (y[i] - psi.mu, y[j] - psi.mu);
            let quad = (v * (a * a + b * b) - 2.0 * c * a * b) / det;
            let log_f = -LN_2PI - 0.5 * det.ln() - 0.5 * quad;
            total += w * log_f;
        }
        Ok(-total)
    }
}

/// Negative (weighted) pairwise-marginal composite log-likelihood.
pub fn pairwise_marginal_nll(
    psi: &ModelParams,
    data: &Dataset,
    weights: Option<&crate::intensity::WeightVector>,
    cutoff: Option<f64>,
) -> Result<f64> {
    psi.validate()?;
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::InvalidInput(format!("{} weights for {} observations", w.len(), data.len())));
        }
    }
    PairwiseLikelihood::new(data, weights.map(|w| w.weights.as_slice()), cutoff)?.nll(psi)
}
