//! Kernel estimation of the sampling intensity and the inverse-intensity
//! weights built from it.
//!
//! The estimator is an isotropic Gaussian kernel smoother in which each data
//! point's kernel is rescaled by the fraction of its mass falling inside the
//! rectangular domain, so that `∫_D λ̂ = n`.

mod bandwidth;
mod weights;

pub use bandwidth::{
    bandwidth_grid, cvl_adaptive_criterion, cvl_criterion, lscv_criterion, ppl_criterion, select_bandwidth,
    BandwidthMethod, BandwidthSpec, BANDWIDTH_GRID_SIZE,
};
pub use weights::{weights_from_intensity, WeightVector, DEFAULT_THRESHOLD};

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::model::{Domain, Location};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Midpoint-rule resolution per axis for `∫_D` terms.
pub const QUADRATURE_CELLS: usize = 128;

/// Values are floored at this fraction of the maximum.
pub const INTENSITY_FLOOR: f64 = 1e-12;

/// Where to evaluate an intensity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    AtPoints,
    Grid(GridSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityEstimate {
    pub at_points: Vec<f64>,
    pub on_grid: Option<(GridSpec, Vec<f64>)>,
    pub bandwidth: BandwidthSpec,
    pub edge_corrected: bool,
}

impl IntensityEstimate {
    pub fn weights(&self, threshold: f64) -> Result<WeightVector> {
        weights_from_intensity(&self.at_points, threshold)
    }
}

/// Standard normal upper tail `P(Z > z)`.
#[inline]
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Mass of `N(s, h²)` inside `[lo, hi]`.
pub fn axis_mass(s: f64, h: f64, lo: f64, hi: f64) -> f64 {
    // 1 - P(below lo) - P(above hi), each tail computed without cancellation.
    (1.0 - upper_tail((s - lo) / h) - upper_tail((hi - s) / h)).max(0.0)
}

/// Mass of an isotropic Gaussian kernel centred at `s` that falls inside `domain`.
pub fn edge_mass(s: &Location, h: f64, domain: &Domain) -> f64 {
    axis_mass(s.x, h, domain.x_min, domain.x_max) * axis_mass(s.y, h, domain.y_min, domain.y_max)
}

/// Kernel smoother with per-point bandwidths and edge-correction masses.
#[derive(Debug, Clone)]
pub struct KernelSmoother<'a> {
    points: &'a [Location],
    domain: Domain,
    h: Vec<f64>,
    inv_two_h2: Vec<f64>,
    /// `1 / (2π h_s² e_s)`, the peak height of each corrected kernel.
    coef: Vec<f64>,
    edge_corrected: bool,
}

impl<'a> KernelSmoother<'a> {
    pub fn uniform(points: &'a [Location], domain: Domain, h: f64) -> Self {
        Self::adaptive(points, domain, vec![h; points.len()])
    }

    pub fn adaptive(points: &'a [Location], domain: Domain, h: Vec<f64>) -> Self {
        let coef = points
            .iter()
            .zip(&h)
            .map(|(p, &hs)| 1.0 / (2.0 * PI * hs * hs * edge_mass(p, hs, &domain).max(1e-300)))
            .collect();
        let inv_two_h2 = h.iter().map(|hs| 0.5 / (hs * hs)).collect();
        KernelSmoother { points, domain, h, inv_two_h2, coef, edge_corrected: true }
    }

    /// Drop the edge correction (every kernel keeps unit mass).
    pub fn without_edge_correction(mut self) -> Self {
        self.coef = self.h.iter().map(|hs| 1.0 / (2.0 * PI * hs * hs)).collect();
        self.edge_corrected = false;
        self
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.h
    }

    #[inline]
    fn term(&self, s: usize, x: f64, y: f64) -> f64 {
        let p = &self.points[s];
        let d2 = (x - p.x).powi(2) + (y - p.y).powi(2);
        self.coef[s] * (-d2 * self.inv_two_h2[s]).exp()
    }

    pub fn at(&self, x: &Location) -> f64 {
        (0..self.points.len()).map(|s| self.term(s, x.x, x.y)).sum()
    }

    /// Estimate at every data point, optionally leaving each point out of its own estimate.
    pub fn at_points(&self, leave_one_out: bool) -> Vec<f64> {
        (0..self.points.len())
            .map(|i| {
                let p = &self.points[i];
                (0..self.points.len())
                    .filter(|&s| !leave_one_out || s != i)
                    .map(|s| self.term(s, p.x, p.y))
                    .sum()
            })
            .collect()
    }

    /// Estimate at the cell centres of `grid`, using separability of the Gaussian kernel.
    pub fn on_grid(&self, grid: &GridSpec) -> Vec<f64> {
        let n = self.points.len();
        let xs: Vec<f64> = (0..grid.nx).map(|i| grid.domain.x_min + (i as f64 + 0.5) * grid.dx()).collect();
        let ys: Vec<f64> = (0..grid.ny).map(|j| grid.domain.y_min + (j as f64 + 0.5) * grid.dy()).collect();
        // kx[a][s] carries the kernel coefficient, ky[b][s] the y factor.
        let kx: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| (0..n).map(|s| self.coef[s] * (-(x - self.points[s].x).powi(2) * self.inv_two_h2[s]).exp()).collect())
            .collect();
        let ky: Vec<Vec<f64>> = ys
            .iter()
            .map(|&y| (0..n).map(|s| (-(y - self.points[s].y).powi(2) * self.inv_two_h2[s]).exp()).collect())
            .collect();
        let mut out = Vec::with_capacity(grid.cells());
        for row in &ky {
            for col in &kx {
                out.push(crate::linalg::dot(col, row));
            }
        }
        out
    }

    fn quadrature_grid(&self, cells: usize) -> GridSpec {
        GridSpec { domain: self.domain, nx: cells, ny: cells }
    }

    /// Midpoint-rule `∫_D λ̂`.
    pub fn integral(&self, cells: usize) -> f64 {
        let g = self.quadrature_grid(cells);
        self.on_grid(&g).iter().sum::<f64>() * g.cell_area()
    }

    /// Midpoint-rule `∫_D λ̂²`.
    pub fn integral_sq(&self, cells: usize) -> f64 {
        let g = self.quadrature_grid(cells);
        self.on_grid(&g).iter().map(|v| v * v).sum::<f64>() * g.cell_area()
    }
}

fn floor_values(v: &mut [f64]) {
    let max = v.iter().cloned().fold(0.0, f64::max);
    let floor = INTENSITY_FLOOR * max;
    for x in v.iter_mut() {
        if !(*x >= floor) {
            *x = floor;
        }
    }
}

/// Kernel intensity estimate at the data points and optionally on a grid.
pub fn estimate_intensity(
    points: &[Location],
    domain: &Domain,
    bw: &BandwidthSpec,
    eval: Evaluation,
) -> Result<IntensityEstimate> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("intensity estimation needs at least 2 points".into()));
    }
    if !(domain.area() > 0.0) {
        return Err(Error::InvalidInput("degenerate domain".into()));
    }
    let smoother = bw.smoother(points, *domain)?;
    let mut at_points = smoother.at_points(false);
    if at_points.iter().all(|v| *v <= 0.0) {
        return Err(Error::Numerical("intensity estimate vanished at every point".into()));
    }
    floor_values(&mut at_points);
    let on_grid = match eval {
        Evaluation::AtPoints => None,
        Evaluation::Grid(g) => {
            let mut v = smoother.on_grid(&g);
            floor_values(&mut v);
            Some((g, v))
        }
    };
    Ok(IntensityEstimate { at_points, on_grid, bandwidth: bw.clone(), edge_corrected: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_mass_centre_and_corner() {
        let d = Domain::unit_square();
        // At exactly h = width/10 the lost mass is 4·P(Z > 5) ≈ 1.15e-6.
        assert!((edge_mass(&Location::new(0.5, 0.5), 0.095, &d) - 1.0).abs() < 1e-6);
        assert!((edge_mass(&Location::new(0.5, 0.5), 0.1, &d) - 1.0).abs() < 1.2e-6);
        let h = 0.1;
        assert!((edge_mass(&Location::new(0.0, 0.0), h, &d) - 0.25).abs() < 1e-3);
        assert!((edge_mass(&Location::new(1.0, 0.0), h, &d) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn single_point_peak_height() {
        let d = Domain::unit_square();
        let pts = [Location::new(0.5, 0.5), Location::new(0.05, 0.95)];
        let h = 0.01;
        let k = KernelSmoother::uniform(&pts[..1], d, h);
        let v = k.at(&pts[0]);
        assert!((v - 1.0 / (2.0 * PI * h * h)).abs() / v < 1e-9);
        let k = KernelSmoother::uniform(&pts, d, h);
        assert!(k.at(&Location::new(0.5, 0.5 + 11.0 * h)) < 1e-6 * k.at(&pts[0]));
    }

    #[test]
    fn grid_matches_direct_evaluation() {
        let d = Domain::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let pts = [Location::new(0.3, 0.2), Location::new(1.7, 0.9), Location::new(1.0, 0.5)];
        let k = KernelSmoother::adaptive(&pts, d, vec![0.1, 0.3, 0.2]);
        let g = GridSpec::new(d, 7, 5).unwrap();
        let on = k.on_grid(&g);
        for c in 0..g.cells() {
            let direct = k.at(&g.center(c));
            assert!((on[c] - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn integral_is_point_count() {
        let d = Domain::unit_square();
        let pts: Vec<Location> = (0..20).map(|i| Location::new((i as f64 * 0.37) % 1.0, (i as f64 * 0.61) % 1.0)).collect();
        let k = KernelSmoother::uniform(&pts, d, 0.08);
        let total = k.integral(QUADRATURE_CELLS);
        assert!((total / 20.0 - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn requires_two_points() {
        let d = Domain::unit_square();
        let bw = BandwidthSpec::fixed(0.1);
        assert!(estimate_intensity(&[Location::new(0.5, 0.5)], &d, &bw, Evaluation::AtPoints).is_err());
    }
}
