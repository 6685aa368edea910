use super::LN_2PI;
use crate::error::Result;
use crate::linalg::{Cholesky, SymMatrix};
use crate::model::{Dataset, MaternKernel, ModelParams};

/// Exact Gaussian likelihood with the pairwise distances cached.
#[derive(Debug, Clone)]
pub struct ExactLikelihood<'a> {
    data: &'a Dataset,
    /// Row-major strict lower triangle of the distance matrix.
    dist: Vec<f64>,
}

impl<'a> ExactLikelihood<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        let locs = data.locations();
        let mut dist = Vec::with_capacity(locs.len() * locs.len().saturating_sub(1) / 2);
        for i in 0..locs.len() {
            for j in 0..i {
                dist.push(locs[i].dist(&locs[j]));
            }
        }
        ExactLikelihood { data, dist }
    }

    pub(crate) fn covariance(&self, psi: &ModelParams) -> SymMatrix {
        let n = self.data.len();
        let kernel = MaternKernel::new(psi.theta.nu);
        let (s2, phi) = (psi.theta.sigma2, psi.theta.phi);
        let mut m = SymMatrix::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..i {
                let c = kernel.cov(self.dist[k], s2, phi);
                m.set(i, j, c);
                m.set(j, i, c);
                k += 1;
            }
            m.set(i, i, s2 + psi.tau2);
        }
        m
    }

    pub fn nll(&self, psi: &ModelParams) -> Result<f64> {
        let chol = self.covariance(psi).cholesky()?;
        Ok(nll_from_factor(&chol, self.data.values(), psi.mu))
    }
}

pub(crate) fn nll_from_factor(chol: &Cholesky, y: &[f64], mu: f64) -> f64 {
    let mut z: Vec<f64> = y.iter().map(|v| v - mu).collect();
    chol.forward_solve_in_place(&mut z);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    0.5 * (chol.log_det() + quad + y.len() as f64 * LN_2PI)
}

/// `−log N(y; μ1, Σ(θ) + τ²I)`.
pub fn exact_nll(psi: &ModelParams, data: &Dataset) -> Result<f64> {
    psi.validate()?;
    ExactLikelihood::new(data).nll(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Location;

    #[test]
    fn single_observation_is_univariate_normal() {
        let psi = ModelParams::new(1.0, 2.0, 0.3, 1.0, 0.5).unwrap();
        let d = Dataset::new(vec![Location::new(0.2, 0.2)], vec![3.0]).unwrap();
        let v = 2.5f64;
        let expected = 0.5 * (2.0 * std::f64::consts::PI * v).ln() + 4.0 / (2.0 * v);
        assert!((exact_nll(&psi, &d).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn independence_limit() {
        let psi = ModelParams::new(0.5, 1.2, 1e-8, 1.0, 0.3).unwrap();
        let locs = vec![Location::new(0.0, 0.0), Location::new(0.5, 0.1), Location::new(0.9, 0.9)];
        let y = vec![0.1, 1.7, -0.4];
        let d = Dataset::new(locs, y.clone()).unwrap();
        let v = 1.5f64;
        let expected: f64 = y
            .iter()
            .map(|yi| 0.5 * (2.0 * std::f64::consts::PI * v).ln() + (yi - 0.5).powi(2) / (2.0 * v))
            .sum();
        assert!((exact_nll(&psi, &d).unwrap() - expected).abs() < 1e-6);
    }
}
