//! Bandwidth selection by rule of thumb or cross-validation over a log-spaced grid.

use super::{KernelSmoother, QUADRATURE_CELLS};
use crate::error::{Error, Result};
use crate::model::{Domain, Location};
use rayon::prelude::*;

pub const BANDWIDTH_GRID_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandwidthMethod {
    /// Normal-reference rule of thumb.
    Scott,
    /// Least-squares cross-validation.
    Diggle,
    /// Leave-one-out Poisson likelihood cross-validation.
    Ppl,
    /// Cronie–van Lieshout criterion `(Σ 1/λ̂(x_i) − |D|)²`.
    Cvl,
    /// Abramson-type adaptive bandwidths with a CvL-chosen global factor.
    CvlAdaptive,
    /// User-supplied bandwidth.
    Fixed,
}

impl BandwidthMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BandwidthMethod::Scott => "scott",
            BandwidthMethod::Diggle => "diggle",
            BandwidthMethod::Ppl => "ppl",
            BandwidthMethod::Cvl => "CvL",
            BandwidthMethod::CvlAdaptive => "CvL.adaptive",
            BandwidthMethod::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for BandwidthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scott" => Ok(BandwidthMethod::Scott),
            "diggle" => Ok(BandwidthMethod::Diggle),
            "ppl" => Ok(BandwidthMethod::Ppl),
            "cvl" => Ok(BandwidthMethod::Cvl),
            "cvl.adaptive" | "cvl-adaptive" | "cvl_adaptive" => Ok(BandwidthMethod::CvlAdaptive),
            "fixed" => Ok(BandwidthMethod::Fixed),
            other => Err(Error::Parse(format!("unknown bandwidth method '{other}'"))),
        }
    }
}

/// A resolved bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthSpec {
    pub method: BandwidthMethod,
    /// Global bandwidth (the adaptive scale factor for `CvlAdaptive`).
    pub h: f64,
    pub per_point: Option<Vec<f64>>,
    /// Set when the search optimum sits on the edge of the bandwidth grid.
    pub at_boundary: bool,
}

impl BandwidthSpec {
    pub fn fixed(h: f64) -> Self {
        BandwidthSpec { method: BandwidthMethod::Fixed, h, per_point: None, at_boundary: false }
    }

    pub fn smoother<'a>(&self, points: &'a [Location], domain: Domain) -> Result<KernelSmoother<'a>> {
        match &self.per_point {
            Some(h) => {
                if h.len() != points.len() || h.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidParameter("per-point bandwidths must be positive, one per point".into()));
                }
                Ok(KernelSmoother::adaptive(points, domain, h.clone()))
            }
            None => {
                if !(self.h > 0.0) || !self.h.is_finite() {
                    return Err(Error::InvalidParameter(format!("bandwidth must be > 0, got {}", self.h)));
                }
                Ok(KernelSmoother::uniform(points, domain, self.h))
            }
        }
    }
}

/// Log-spaced candidates between `diam/(2n)` and `diam/2`.
pub fn bandwidth_grid(domain: &Domain, n: usize) -> Vec<f64> {
    let diam = domain.diameter();
    let (lo, hi) = ((diam / (2.0 * n as f64)).ln(), (diam / 2.0).ln());
    (0..BANDWIDTH_GRID_SIZE)
        .map(|k| (lo + (hi - lo) * k as f64 / (BANDWIDTH_GRID_SIZE - 1) as f64).exp())
        .collect()
}

/// `∫_D λ̂_h² − 2 Σ_i λ̂_{h,−i}(x_i)`.
pub fn lscv_criterion(points: &[Location], domain: &Domain, h: f64) -> f64 {
    lscv_with(points, domain, h, QUADRATURE_CELLS)
}

pub(crate) fn lscv_with(points: &[Location], domain: &Domain, h: f64, cells: usize) -> f64 {
    let k = KernelSmoother::uniform(points, *domain, h);
    k.integral_sq(cells) - 2.0 * k.at_points(true).iter().sum::<f64>()
}

/// `Σ_i log λ̂_{h,−i}(x_i) − ∫_D λ̂_h` (to be maximized).
pub fn ppl_criterion(points: &[Location], domain: &Domain, h: f64) -> f64 {
    ppl_with(points, domain, h, QUADRATURE_CELLS)
}

pub(crate) fn ppl_with(points: &[Location], domain: &Domain, h: f64, cells: usize) -> f64 {
    let k = KernelSmoother::uniform(points, *domain, h);
    k.at_points(true).iter().map(|v| v.ln()).sum::<f64>() - k.integral(cells)
}

/// `(Σ_i 1/λ̂_h(x_i) − |D|)²`.
pub fn cvl_criterion(points: &[Location], domain: &Domain, h: f64) -> f64 {
    cvl_of(&KernelSmoother::uniform(points, *domain, h), domain)
}

/// CvL criterion for the adaptive estimator with global factor `h0` and pilot values at the points.
pub fn cvl_adaptive_criterion(points: &[Location], domain: &Domain, h0: f64, pilot: &[f64]) -> f64 {
    cvl_of(&KernelSmoother::adaptive(points, *domain, adaptive_bandwidths(h0, pilot)), domain)
}

fn cvl_of(k: &KernelSmoother<'_>, domain: &Domain) -> f64 {
    let s: f64 = k.at_points(false).iter().map(|v| 1.0 / v).sum();
    (s - domain.area()).powi(2)
}

/// `h_i = h0 (pilot_i / g)^{-1/2}` with `g` the geometric mean of the pilot values.
pub fn adaptive_bandwidths(h0: f64, pilot: &[f64]) -> Vec<f64> {
    let log_g = pilot.iter().map(|v| v.ln()).sum::<f64>() / pilot.len() as f64;
    pilot.iter().map(|v| h0 * (v.ln() - log_g).mul_add(-0.5, 0.0).exp()).collect()
}

fn scott(points: &[Location]) -> f64 {
    let n = points.len() as f64;
    let sd = |f: &dyn Fn(&Location) -> f64| {
        let mean = points.iter().map(f).sum::<f64>() / n;
        (points.iter().map(|p| (f(p) - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let factor = n.powf(-1.0 / 6.0);
    (sd(&|p| p.x) * factor * sd(&|p| p.y) * factor).sqrt()
}

/// Index of the smallest finite score; ties go to the lowest index.
fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.is_finite() && best.map_or(true, |b| *s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

fn pick(method: BandwidthMethod, grid: &[f64], scores: &[f64]) -> Result<BandwidthSpec> {
    let i = argmin(scores)
        .ok_or_else(|| Error::Numerical(format!("{} criterion not finite anywhere on the grid", method.name())))?;
    Ok(BandwidthSpec {
        method,
        h: grid[i],
        per_point: None,
        at_boundary: i == 0 || i + 1 == grid.len(),
    })
}

pub fn select_bandwidth(method: BandwidthMethod, points: &[Location], domain: &Domain) -> Result<BandwidthSpec> {
    if points.len() < 5 {
        return Err(Error::InvalidInput("bandwidth selection needs at least 5 points".into()));
    }
    let grid = bandwidth_grid(domain, points.len());
    let eval = |f: &(dyn Fn(f64) -> f64 + Sync)| -> Vec<f64> { grid.par_iter().map(|&h| f(h)).collect() };
    match method {
        BandwidthMethod::Scott => {
            let h = scott(points);
            if !(h > 0.0) {
                return Err(Error::Numerical("points have zero spread".into()));
            }
            Ok(BandwidthSpec { method, h, per_point: None, at_boundary: false })
        }
        BandwidthMethod::Diggle => pick(method, &grid, &eval(&|h| lscv_criterion(points, domain, h))),
        BandwidthMethod::Ppl => {
            let scores = eval(&|h| -ppl_criterion(points, domain, h));
            pick(method, &grid, &scores)
        }
        BandwidthMethod::Cvl => pick(method, &grid, &eval(&|h| cvl_criterion(points, domain, h))),
        BandwidthMethod::CvlAdaptive => {
            let pilot_h = scott(points);
            let pilot = KernelSmoother::uniform(points, *domain, pilot_h).at_points(false);
            let scores = eval(&|h0| cvl_adaptive_criterion(points, domain, h0, &pilot));
            let mut spec = pick(method, &grid, &scores)?;
            spec.per_point = Some(adaptive_bandwidths(spec.h, &pilot));
            Ok(spec)
        }
        BandwidthMethod::Fixed => Err(Error::InvalidParameter("a fixed bandwidth must be given explicitly".into())),
    }
}
