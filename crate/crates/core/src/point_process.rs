//! Preferential samplers driven by a field realization, conditioned on the
//! number of points.

use crate::error::{Error, Result};
use crate::field::{FieldRealization, GridSpec};
use crate::model::{Domain, Location};
use crate::rng::SeedStream;
use rand::distributions::{Distribution, Open01, WeightedIndex};
use rand::Rng;
use rand_distr::{Normal, Poisson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    /// Log-Gaussian Cox process, intensity `exp(α + βS)`.
    Lgcp,
    /// Sigmoidal Cox process, intensity `β / (1 + exp(-S))`.
    Scp,
    /// Thomas cluster process with `Poisson(exp(βS(parent)))` offspring.
    Thomas,
}

impl SamplerKind {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerKind::Lgcp => "LGCP",
            SamplerKind::Scp => "SCP",
            SamplerKind::Thomas => "Thomas",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lgcp" => Ok(SamplerKind::Lgcp),
            "scp" => Ok(SamplerKind::Scp),
            "thomas" => Ok(SamplerKind::Thomas),
            other => Err(Error::Parse(format!("unknown sampler kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    pub alpha: f64,
    pub beta: f64,
    /// Expected parents per unit area (Thomas only).
    pub parent_rate: f64,
    /// Standard deviation of offspring displacement (Thomas only).
    pub offspring_scale: f64,
    pub n: usize,
    /// Maximum number of cluster batches generated before giving up (Thomas only).
    pub max_attempts: usize,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, beta: f64, n: usize) -> Self {
        SamplerSpec {
            kind,
            alpha: 0.0,
            beta,
            parent_rate: 25.0,
            offspring_scale: 0.1,
            n,
            max_attempts: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sampler needs n >= 1".into()));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidParameter("alpha and beta must be finite".into()));
        }
        if !(self.offspring_scale > 0.0) {
            return Err(Error::InvalidParameter("offspring scale must be > 0".into()));
        }
        if self.kind == SamplerKind::Thomas && !(self.parent_rate > 0.0) {
            return Err(Error::InvalidParameter("Thomas parent rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Intensity value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellIntensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl CellIntensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::InvalidInput(format!(
                "{} intensity values for {} cells",
                values.len(),
                grid.cells()
            )));
        }
        Ok(CellIntensity { grid, values })
    }

    pub fn at(&self, p: &Location) -> Result<f64> {
        Ok(self.values[self.grid.cell_of(p)?])
    }
}

/// Deterministic cell intensity of an LGCP or SCP sampler.
pub fn compute_intensity(field: &FieldRealization, spec: &SamplerSpec) -> Result<CellIntensity> {
    spec.validate()?;
    let f: Box<dyn Fn(f64) -> f64> = match spec.kind {
        SamplerKind::Lgcp => Box::new(|s| (spec.alpha + spec.beta * s).exp()),
        SamplerKind::Scp => Box::new(|s| spec.beta / (1.0 + (-s).exp())),
        SamplerKind::Thomas => {
            return Err(Error::InvalidParameter(
                "the Thomas process has no deterministic cell intensity".into(),
            ))
        }
    };
    let values: Vec<f64> = field.values.iter().map(|&s| f(s)).collect();
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Numerical("intensity must be positive and finite in every cell".into()));
    }
    CellIntensity::new(field.grid, values)
}

/// Exactly `n` points with density proportional to the cell intensity:
/// cells by a multinomial draw, positions uniform inside each cell.
pub fn sample_conditioned(intensity: &CellIntensity, n: usize, seed: SeedStream) -> Result<Vec<Location>> {
    if intensity.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("intensities must be positive and finite".into()));
    }
    let grid = &intensity.grid;
    let area = grid.cell_area();
    let picker = WeightedIndex::new(intensity.values.iter().map(|v| v * area))
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = seed.rng();
    let (dx, dy) = (grid.dx(), grid.dy());
    Ok((0..n)
        .map(|_| {
            let cell = picker.sample(&mut rng);
            let (x0, y0) = grid.origin(cell);
            let u: f64 = Open01.sample(&mut rng);
            let v: f64 = Open01.sample(&mut rng);
            Location::new(x0 + u * dx, y0 + v * dy)
        })
        .collect())
}

/// One Thomas realization: homogeneous Poisson parents and their reflected offspring.
#[derive(Debug, Clone, PartialEq)]
pub struct ThomasDraw {
    pub parents: Vec<Location>,
    pub offspring: Vec<Location>,
}

pub fn thomas_draw<R: Rng>(field: &FieldRealization, spec: &SamplerSpec, rng: &mut R) -> Result<ThomasDraw> {
    let domain = field.grid.domain;
    let mean_parents = spec.parent_rate * domain.area();
    let n_parents = Poisson::new(mean_parents)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng) as usize;
    let displacement = Normal::new(0.0, spec.offspring_scale).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut parents = Vec::with_capacity(n_parents);
    let mut offspring = Vec::new();
    for _ in 0..n_parents {
        let u: f64 = Open01.sample(rng);
        let v: f64 = Open01.sample(rng);
        let parent = Location::new(domain.x_min + u * domain.width(), domain.y_min + v * domain.height());
        let mean = (spec.beta * field.value_at(&parent)?).exp();
        let count = Poisson::new(mean).map_err(|e| Error::Numerical(e.to_string()))?.sample(rng) as usize;
        for _ in 0..count {
            let x = reflect(parent.x + displacement.sample(rng), domain.x_min, domain.x_max);
            let y = reflect(parent.y + displacement.sample(rng), domain.y_min, domain.y_max);
            offspring.push(Location::new(x, y));
        }
        parents.push(parent);
    }
    Ok(ThomasDraw { parents, offspring })
}

/// Exactly `spec.n` Thomas points: independent realizations are superposed
/// until at least `n` offspring exist, then `n` are kept uniformly at random.
pub fn sample_thomas(field: &FieldRealization, spec: &SamplerSpec, seed: SeedStream) -> Result<Vec<Location>> {
    spec.validate()?;
    if spec.kind != SamplerKind::Thomas {
        return Err(Error::InvalidParameter("sample_thomas needs a Thomas sampler spec".into()));
    }
    let mut rng = seed.rng();
    let mut pool = Vec::new();
    for _ in 0..spec.max_attempts {
        pool.extend(thomas_draw(field, spec, &mut rng)?.offspring);
        if pool.len() >= spec.n {
            let keep = rand::seq::index::sample(&mut rng, pool.len(), spec.n);
            return Ok(keep.iter().map(|i| pool[i]).collect());
        }
    }
    Err(Error::RetryBudgetExhausted { target: spec.n, attempts: spec.max_attempts })
}

/// Draw `spec.n` points from whichever sampler `spec` names.
pub fn sample_points(field: &FieldRealization, spec: &SamplerSpec, seed: SeedStream) -> Result<Vec<Location>> {
    match spec.kind {
        SamplerKind::Thomas => sample_thomas(field, spec, seed),
        _ => sample_conditioned(&compute_intensity(field, spec)?, spec.n, seed),
    }
}

/// Fold `v` back into `[lo, hi]` by mirror reflection, nudged off the boundary.
fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let len = hi - lo;
    let mut t = (v - lo).rem_euclid(2.0 * len);
    if t > len {
        t = 2.0 * len - t;
    }
    let eps = len * 1e-12;
    lo + t.clamp(eps, len - eps)
}

/// Uniform points in a domain, used for non-preferential designs.
pub fn sample_uniform(domain: &Domain, n: usize, seed: SeedStream) -> Vec<Location> {
    let mut rng = seed.rng();
    (0..n)
        .map(|_| {
            let u: f64 = Open01.sample(&mut rng);
            let v: f64 = Open01.sample(&mut rng);
            Location::new(domain.x_min + u * domain.width(), domain.y_min + v * domain.height())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize, s: f64) -> FieldRealization {
        FieldRealization::constant(GridSpec::unit_square(n).unwrap(), s)
    }

    #[test]
    fn intensity_examples() {
        let spec = SamplerSpec::new(SamplerKind::Lgcp, 1.0, 10);
        assert!(compute_intensity(&flat(4, 0.0), &spec).unwrap().values.iter().all(|&v| v == 1.0));
        let spec = SamplerSpec::new(SamplerKind::Scp, 1.0, 10);
        assert!(compute_intensity(&flat(4, 0.0), &spec).unwrap().values.iter().all(|&v| v == 0.5));
        let mut f = flat(2, 0.0);
        f.values[1] = 2f64.ln();
        let lam = compute_intensity(&f, &SamplerSpec::new(SamplerKind::Lgcp, 1.0, 10)).unwrap();
        assert!((lam.values[0] - 1.0).abs() < 1e-15 && (lam.values[1] - 2.0).abs() < 1e-15);
        let spec = SamplerSpec::new(SamplerKind::Thomas, 1.0, 10);
        assert!(compute_intensity(&f, &spec).is_err());
    }

    #[test]
    fn single_cell_grid_holds_everything() {
        let grid = GridSpec::new(Domain::new(2.0, 3.0, 5.0, 5.5).unwrap(), 1, 1).unwrap();
        let lam = CellIntensity::new(grid, vec![3.0]).unwrap();
        let pts = sample_conditioned(&lam, 250, SeedStream::new(1, 1)).unwrap();
        assert_eq!(pts.len(), 250);
        assert!(pts.iter().all(|p| p.x > 2.0 && p.x < 3.0 && p.y > 5.0 && p.y < 5.5));
    }

    #[test]
    fn reflection_stays_inside() {
        for v in [-2.7, -0.1, 0.0, 0.3, 1.0, 1.4, 3.9] {
            let r = reflect(v, 0.0, 1.0);
            assert!(r > 0.0 && r < 1.0, "{v} -> {r}");
        }
        assert!((reflect(1.25, 0.0, 1.0) - 0.75).abs() < 1e-12);
        assert!((reflect(-0.25, 0.0, 1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_gives_unit_offspring_mean() {
        let f = flat(4, 1.3);
        let mut spec = SamplerSpec::new(SamplerKind::Thomas, 0.0, 10);
        spec.parent_rate = 400.0;
        let mut rng = SeedStream::new(3, 3).rng();
        let (mut parents, mut kids) = (0usize, 0usize);
        for _ in 0..50 {
            let d = thomas_draw(&f, &spec, &mut rng).unwrap();
            parents += d.parents.len();
            kids += d.offspring.len();
        }
        let ratio = kids as f64 / parents as f64;
        assert!((ratio - 1.0).abs() < 0.05, "offspring per parent {ratio}");
    }

    #[test]
    fn tiny_offspring_scale_hugs_parents() {
        let f = flat(4, 0.5);
        let mut spec = SamplerSpec::new(SamplerKind::Thomas, 1.0, 10);
        spec.offspring_scale = 1e-9;
        let d = thomas_draw(&f, &spec, &mut SeedStream::new(8, 0).rng()).unwrap();
        assert!(!d.offspring.is_empty());
        for o in &d.offspring {
            let nearest = d.parents.iter().map(|p| p.dist(o)).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-6);
        }
    }

    #[test]
    fn thomas_gives_exact_count_or_fails() {
        let f = flat(4, 0.0);
        let spec = SamplerSpec::new(SamplerKind::Thomas, 1.0, 800);
        let pts = sample_thomas(&f, &spec, SeedStream::new(2, 0)).unwrap();
        assert_eq!(pts.len(), 800);
        let mut spec = SamplerSpec::new(SamplerKind::Thomas, 1.0, 100_000);
        spec.max_attempts = 3;
        assert_eq!(
            sample_thomas(&f, &spec, SeedStream::new(2, 0)).unwrap_err(),
            Error::RetryBudgetExhausted { target: 100_000, attempts: 3 }
        );
    }
}
