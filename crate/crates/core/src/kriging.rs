//! Plug-in kriging of the latent surface `μ + S` at target locations.
//!
//! The data covariance carries the nugget on its diagonal while the
//! cross-covariances between targets and data do not, so predictions and
//! variances refer to the smooth process rather than to a new noisy reading.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{build_cov_matrix, Dataset, Location, MaternKernel, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingOutput {
    pub targets: Vec<Location>,
    pub predictions: Vec<f64>,
    pub variances: Vec<f64>,
}

impl KrigingOutput {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Simple kriging with `ψ` plugged in; one factorization serves all targets.
pub fn krige(psi: &ModelParams, data: &Dataset, targets: &[Location]) -> Result<KrigingOutput> {
    psi.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("kriging needs at least one observation".into()));
    }
    if let Some(t) = targets.iter().find(|t| !t.x.is_finite() || !t.y.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite target ({}, {})", t.x, t.y)));
    }
    let chol = build_cov_matrix(data.locations(), &psi.theta, psi.tau2)?.cholesky()?;
    let resid: Vec<f64> = data.values().iter().map(|v| v - psi.mu).collect();
    let alpha = chol.solve(&resid);
    let kernel = MaternKernel::new(psi.theta.nu);
    let (s2, phi) = (psi.theta.sigma2, psi.theta.phi);
    let locs = data.locations();
    let (predictions, variances): (Vec<f64>, Vec<f64>) = targets
        .par_iter()
        .map(|t| {
            let mut c: Vec<f64> = locs.iter().map(|x| kernel.cov(t.dist(x), s2, phi)).collect();
            let pred = psi.mu + c.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>();
            chol.forward_solve_in_place(&mut c);
            let var = (s2 - c.iter().map(|v| v * v).sum::<f64>()).max(0.0);
            (pred, var)
        })
        .unzip();
    Ok(KrigingOutput { targets: targets.to_vec(), predictions, variances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::matern_cov;

    #[test]
    fn single_observation_formulas() {
        let psi = ModelParams::new(0.0, 1.0, 0.2, 1.0, 0.0).unwrap();
        let d = Dataset::new(vec![Location::new(0.3, 0.3)], vec![1.7]).unwrap();
        let t = Location::new(0.45, 0.5);
        let out = krige(&psi, &d, &[t]).unwrap();
        let c = matern_cov(0.25, &psi.theta).unwrap();
        assert!((out.predictions[0] - c * 1.7).abs() < 1e-14);
        assert!((out.variances[0] - (1.0 - c * c)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_targets() {
        let psi = ModelParams::new(0.0, 1.0, 0.2, 1.0, 0.1).unwrap();
        let d = Dataset::new(vec![Location::new(0.3, 0.3)], vec![1.7]).unwrap();
        assert!(krige(&psi, &d, &[Location::new(f64::NAN, 0.0)]).is_err());
        assert!(krige(&psi, &d, &[]).unwrap().is_empty());
    }
}
