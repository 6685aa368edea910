//! Matérn field simulation on a regular lattice and noisy observation of it.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::model::{CovParams, Dataset, Domain, Location, MaternKernel};
use crate::rng::SeedStream;
use rand_distr::{Distribution, StandardNormal};

/// Default cap on the number of cells factorized densely.
pub const DEFAULT_MAX_CELLS: usize = 4096;
/// Diagonal jitter, relative to `σ²`, added before factorizing the lattice covariance.
pub const SIMULATION_JITTER: f64 = 1e-10;

/// Regular `nx × ny` lattice of cells tiling a domain. Cells are indexed
/// row-major with `x` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(domain: Domain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(format!("grid needs at least one cell per axis, got {nx}x{ny}")));
        }
        Ok(GridSpec { domain, nx, ny })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(Domain::unit_square(), n, n)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn dx(&self) -> f64 {
        self.domain.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.domain.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn center(&self, cell: usize) -> Location {
        let (ix, iy) = (cell % self.nx, cell / self.nx);
        Location::new(
            self.domain.x_min + (ix as f64 + 0.5) * self.dx(),
            self.domain.y_min + (iy as f64 + 0.5) * self.dy(),
        )
    }

    pub fn centers(&self) -> Vec<Location> {
        (0..self.cells()).map(|c| self.center(c)).collect()
    }

    /// Lower-left corner of a cell.
    pub fn origin(&self, cell: usize) -> (f64, f64) {
        let (ix, iy) = (cell % self.nx, cell / self.nx);
        (self.domain.x_min + ix as f64 * self.dx(), self.domain.y_min + iy as f64 * self.dy())
    }

    /// Index of the cell containing `p`; points on the upper edges belong to the last cell.
    pub fn cell_of(&self, p: &Location) -> Result<usize> {
        if !self.domain.contains(p) || !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let ix = (((p.x - self.domain.x_min) / self.dx()) as usize).min(self.nx - 1);
        let iy = (((p.y - self.domain.y_min) / self.dy()) as usize).min(self.ny - 1);
        Ok(iy * self.nx + ix)
    }
}

/// One draw of the latent field at every cell center.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub seed: SeedStream,
}

impl FieldRealization {
    /// Field value at the cell containing `p`.
    pub fn value_at(&self, p: &Location) -> Result<f64> {
        Ok(self.values[self.grid.cell_of(p)?])
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        FieldRealization { grid, values: vec![value; grid.cells()], seed: SeedStream::new(0, 0) }
    }
}

/// Factorized lattice covariance, reusable across any number of draws.
#[derive(Debug, Clone)]
pub struct FieldSimulator {
    grid: GridSpec,
    theta: CovParams,
    chol: Cholesky,
}

impl FieldSimulator {
    pub fn new(grid: GridSpec, theta: CovParams) -> Result<Self> {
        Self::with_budget(grid, theta, DEFAULT_MAX_CELLS)
    }

    pub fn with_budget(grid: GridSpec, theta: CovParams, max_cells: usize) -> Result<Self> {
        theta.validate()?;
        if grid.nx < 2 || grid.ny < 2 {
            return Err(Error::InvalidParameter("field grids need at least 2 cells per axis".into()));
        }
        let cells = grid.cells();
        if cells > max_cells {
            return Err(Error::GridTooLarge { cells, max: max_cells });
        }
        // Covariance depends only on the lattice offset, so tabulate it once.
        let kernel = MaternKernel::new(theta.nu);
        let (nx, dx, dy) = (grid.nx, grid.dx(), grid.dy());
        let mut by_offset = vec![0.0; grid.nx * grid.ny];
        for oy in 0..grid.ny {
            for ox in 0..grid.nx {
                let h = (ox as f64 * dx).hypot(oy as f64 * dy);
                by_offset[oy * nx + ox] = kernel.cov(h, theta.sigma2, theta.phi);
            }
        }
        let mut cov = SymMatrix::from_fn(cells, |i, j| {
            let ox = (i % nx).abs_diff(j % nx);
            let oy = (i / nx).abs_diff(j / nx);
            by_offset[oy * nx + ox]
        });
        cov.add_diagonal(SIMULATION_JITTER * theta.sigma2);
        let chol = cov.cholesky()?;
        Ok(FieldSimulator { grid, theta, chol })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn theta(&self) -> &CovParams {
        &self.theta
    }

    pub fn draw(&self, seed: SeedStream) -> FieldRealization {
        let mut rng = seed.rng();
        let z: Vec<f64> = (0..self.grid.cells()).map(|_| StandardNormal.sample(&mut rng)).collect();
        FieldRealization { grid: self.grid, values: self.chol.lower_mul(&z), seed }
    }
}

/// Draw one zero-mean Matérn field on the cell centers of `spec`.
pub fn simulate_field(spec: GridSpec, theta: CovParams, seed: SeedStream) -> Result<FieldRealization> {
    Ok(FieldSimulator::new(spec, theta)?.draw(seed))
}

/// Observations `Y_i = μ + S(cell of x_i) + ε_i` with `ε_i ~ N(0, τ²)`.
pub fn observe(
    field: &FieldRealization,
    locs: &[Location],
    mu: f64,
    tau2: f64,
    seed: SeedStream,
) -> Result<Dataset> {
    if !(tau2 >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("need finite mu and tau2 >= 0, got mu={mu}, tau2={tau2}")));
    }
    let sd = tau2.sqrt();
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(locs.len());
    for p in locs {
        let s = field.value_at(p)?;
        let eps: f64 = StandardNormal.sample(&mut rng);
        values.push(mu + s + sd * eps);
    }
    Dataset::within(&field.grid.domain, locs.to_vec(), values)
}
