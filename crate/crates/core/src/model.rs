//! Domain geometry, parameter containers and the Matérn covariance.

use crate::bessel::BesselK;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use statrs::function::gamma::ln_gamma;

/// Axis-aligned rectangular study region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let ok = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !ok || !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidParameter(format!(
                "domain [{x_min}, {x_max}] x [{y_min}, {y_max}] must have nonempty finite intervals"
            )));
        }
        Ok(Domain { x_min, x_max, y_min, y_max })
    }

    pub fn unit_square() -> Self {
        Domain { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: &Location) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Smallest rectangle holding every location, padded by `pad` times its extent.
    pub fn bounding(locs: &[Location], pad: f64) -> Result<Self> {
        let first = locs
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot bound an empty point set".into()))?;
        let (mut x0, mut x1, mut y0, mut y1) = (first.x, first.x, first.y, first.y);
        for p in locs {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let px = ((x1 - x0) * pad).max(1e-9);
        let py = ((y1 - y0) * pad).max(1e-9);
        Domain::new(x0 - px, x1 + px, y0 - py, y1 + py)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Location { x, y }
    }

    #[inline]
    pub fn dist(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Matérn covariance parameters `(σ², φ, ν)`. The smoothness is held fixed during fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovParams {
    pub sigma2: f64,
    pub phi: f64,
    pub nu: f64,
}

impl CovParams {
    pub fn new(sigma2: f64, phi: f64, nu: f64) -> Result<Self> {
        let p = CovParams { sigma2, phi, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma2", self.sigma2), ("phi", self.phi), ("nu", self.nu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Full parameter vector `ψ = (μ, σ², φ, τ²)` with fixed `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub theta: CovParams,
    pub tau2: f64,
}

impl ModelParams {
    pub fn new(mu: f64, sigma2: f64, phi: f64, nu: f64, tau2: f64) -> Result<Self> {
        let p = ModelParams { mu, theta: CovParams { sigma2, phi, nu }, tau2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.tau2 >= 0.0) || !self.tau2.is_finite() {
            return Err(Error::InvalidParameter(format!("tau2 must be finite and >= 0, got {}", self.tau2)));
        }
        self.theta.validate()
    }

    pub fn kappa(&self) -> f64 {
        microergodic(&self.theta)
    }
}

/// Paired locations and observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    locations: Vec<Location>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(locations: Vec<Location>, values: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidInput("dataset needs at least one observation".into()));
        }
        if locations.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} locations but {} values",
                locations.len(),
                values.len()
            )));
        }
        if locations.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite observation".into()));
        }
        if let Some((i, j)) = find_duplicate(&locations, 1e-12) {
            return Err(Error::InvalidInput(format!("locations {i} and {j} coincide")));
        }
        Ok(Dataset { locations, values })
    }

    /// Like [`Dataset::new`], additionally requiring every location to lie in `domain`.
    pub fn within(domain: &Domain, locations: Vec<Location>, values: Vec<f64>) -> Result<Self> {
        if let Some(p) = locations.iter().find(|p| !domain.contains(p)) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        Self::new(locations, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same locations, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.locations.clone(), values)
    }
}

fn find_duplicate(locs: &[Location], tol: f64) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..locs.len()).collect();
    idx.sort_by(|&a, &b| locs[a].x.total_cmp(&locs[b].x));
    for (k, &i) in idx.iter().enumerate() {
        for &j in &idx[k + 1..] {
            if locs[j].x - locs[i].x > tol {
                break;
            }
            if locs[i].dist(&locs[j]) <= tol {
                return Some((i.min(j), i.max(j)));
            }
        }
    }
    None
}

/// Matérn correlation with the order-dependent constants precomputed.
#[derive(Debug, Clone, Copy)]
pub struct MaternKernel {
    nu: f64,
    bessel: BesselK,
    scale: f64,
    ln_norm: f64,
}

impl MaternKernel {
    pub fn new(nu: f64) -> Self {
        MaternKernel {
            nu,
            bessel: BesselK::new(nu),
            scale: (2.0 * nu).sqrt(),
            ln_norm: (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu),
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Correlation at scaled distance `r = h/φ ≥ 0`.
    #[inline]
    pub fn correlation(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 1.0;
        }
        let u = self.scale * r;
        (self.ln_norm + self.nu * u.ln() + self.bessel.ln_scaled(u) - u).exp().min(1.0)
    }

    #[inline]
    pub fn cov(&self, h: f64, sigma2: f64, phi: f64) -> f64 {
        sigma2 * self.correlation(h / phi)
    }
}

/// Matérn covariance at distance `h`.
pub fn matern_cov(h: f64, theta: &CovParams) -> Result<f64> {
    theta.validate()?;
    if !(h >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be >= 0, got {h}")));
    }
    Ok(MaternKernel::new(theta.nu).cov(h, theta.sigma2, theta.phi))
}

/// Covariance matrix with `tau2` added on the diagonal.
pub fn build_cov_matrix(locs: &[Location], theta: &CovParams, tau2: f64) -> Result<SymMatrix> {
    theta.validate()?;
    if !(tau2 >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau2 must be >= 0, got {tau2}")));
    }
    let kernel = MaternKernel::new(theta.nu);
    Ok(cov_matrix_with(&kernel, locs, theta.sigma2, theta.phi, tau2))
}

pub(crate) fn cov_matrix_with(
    kernel: &MaternKernel,
    locs: &[Location],
    sigma2: f64,
    phi: f64,
    tau2: f64,
) -> SymMatrix {
    SymMatrix::from_fn(locs.len(), |i, j| {
        if i == j {
            sigma2 + tau2
        } else {
            kernel.cov(locs[i].dist(&locs[j]), sigma2, phi)
        }
    })
}

/// Microergodic parameter `κ = σ² / φ^{2ν}`.
pub fn microergodic(theta: &CovParams) -> f64 {
    theta.sigma2 / theta.phi.powf(2.0 * theta.nu)
}
