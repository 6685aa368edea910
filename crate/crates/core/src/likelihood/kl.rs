use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// `KL(N(0, Σ_true) ‖ N(0, Σ_approx))`.
pub fn gaussian_kl(sigma_true: &SymMatrix, sigma_approx: &SymMatrix) -> Result<f64> {
    let n = sigma_true.dim();
    if sigma_approx.dim() != n {
        return Err(Error::InvalidInput("covariance matrices differ in size".into()));
    }
    let ct = sigma_true.cholesky()?;
    let ca = sigma_approx.cholesky()?;
    // tr(Σa⁻¹ Σt) = ‖La⁻¹ Lt‖_F²
    let mut trace = 0.0;
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = if i >= j { ct.l(i, j) } else { 0.0 };
        }
        ca.forward_solve_in_place(&mut col);
        trace += col.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(0.5 * (trace - n as f64 + ca.log_det() - ct.log_det()))
}
