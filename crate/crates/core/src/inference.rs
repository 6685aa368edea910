//! Quasi-Newton maximization of likelihood objectives.
//!
//! Optimization runs over the unconstrained vector
//! `z = (μ, log σ², log φ, log τ²)` with BFGS updates, central finite-difference
//! gradients and a backtracking line search. `ν` is held fixed. The range is
//! capped (by default at ten domain diameters) and the log-scale components are
//! boxed far from overflow, so iterates stay inside the parameter space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::likelihood::{Objective, PreparedObjective};
use crate::model::{Dataset, Domain, ModelParams};
use crate::rng::SeedStream;

/// Index of each component in the unconstrained vector.
pub const MU: usize = 0;
pub const LOG_SIGMA2: usize = 1;
pub const LOG_PHI: usize = 2;
pub const LOG_TAU2: usize = 3;

const LOG_BOX: f64 = 25.0;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Relative objective change below which a step counts as stalled.
    pub ftol: f64,
    /// Gradient norm tolerance in the unconstrained space.
    pub gtol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub max_restarts: usize,
    /// Upper bound on `φ`; `None` leaves only the overflow box.
    pub phi_cap: Option<f64>,
    /// Components of `z` that are optimized; the rest stay at the init.
    pub free: [bool; 4],
    pub seed: SeedStream,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 200,
            ftol: 1e-8,
            gtol: 1e-4,
            fd_step: 1e-5,
            max_restarts: 3,
            phi_cap: None,
            free: [true; 4],
            seed: SeedStream::new(0, 0),
        }
    }
}

impl FitConfig {
    /// Defaults with `φ` capped at ten diameters of `domain`.
    pub fn for_domain(domain: &Domain) -> Self {
        FitConfig { phi_cap: Some(10.0 * domain.diameter()), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub psi_hat: ModelParams,
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub restarts_used: usize,
    /// The range sits on its cap at the returned point.
    pub phi_capped: bool,
}

/// Rule-of-thumb starting values.
pub fn default_init(data: &Dataset, domain: &Domain, nu: f64) -> Result<ModelParams> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 observations, got {n}")));
    }
    let y = data.values();
    let mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma2 = (0.9 * var).max(1e-6);
    let tau2 = (0.1 * var).max(1e-7);
    ModelParams::new(mean, sigma2, domain.diameter() / 10.0, nu, tau2)
}

pub fn to_unconstrained(psi: &ModelParams) -> [f64; 4] {
    [psi.mu, psi.theta.sigma2.ln(), psi.theta.phi.ln(), psi.tau2.ln()]
}

pub fn from_unconstrained(z: &[f64; 4], nu: f64) -> Result<ModelParams> {
    ModelParams::new(z[MU], z[LOG_SIGMA2].exp(), z[LOG_PHI].exp(), nu, z[LOG_TAU2].exp())
}

/// Central differences with step `rel·max(|z_i|, 1)` in each free component.
pub fn fd_gradient<F>(f: &mut F, z: &[f64; 4], rel: f64, free: &[bool; 4]) -> [f64; 4]
where
    F: FnMut(&[f64; 4]) -> f64,
{
    let mut g = [0.0; 4];
    for i in 0..4 {
        if !free[i] {
            continue;
        }
        let h = rel * z[i].abs().max(1.0);
        let mut zp = *z;
        let mut zm = *z;
        zp[i] += h;
        zm[i] -= h;
        g[i] = (f(&zp) - f(&zm)) / (2.0 * h);
    }
    g
}

/// Objective on the unconstrained scale; failures map to `+∞`.
pub fn unconstrained_objective<'a>(prepared: &'a PreparedObjective<'a>, nu: f64) -> impl FnMut(&[f64; 4]) -> f64 + 'a {
    move |z: &[f64; 4]| {
        if z.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        match from_unconstrained(z, nu).and_then(|p| prepared.nll(&p)) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }
}

struct Bounds {
    lo: [f64; 4],
    hi: [f64; 4],
}

impl Bounds {
    fn new(phi_cap: Option<f64>) -> Self {
        let mut hi = [f64::INFINITY, LOG_BOX, LOG_BOX, LOG_BOX];
        if let Some(c) = phi_cap {
            hi[LOG_PHI] = c.ln().min(LOG_BOX);
        }
        Bounds { lo: [f64::NEG_INFINITY, -LOG_BOX, -LOG_BOX, -LOG_BOX], hi }
    }

    fn project(&self, z: &mut [f64; 4]) {
        for i in 0..4 {
            z[i] = z[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Components pinned at a bound with the descent direction pointing out.
    fn active(&self, z: &[f64; 4], g: &[f64; 4]) -> [bool; 4] {
        let mut a = [false; 4];
        for i in 0..4 {
            a[i] = (z[i] >= self.hi[i] && g[i] < 0.0) || (z[i] <= self.lo[i] && g[i] > 0.0);
        }
        a
    }
}

struct RunOutcome {
    z: [f64; 4],
    f: f64,
    iterations: usize,
    converged: bool,
    gnorm: f64,
}

fn norm(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn projected_gradient(g: &[f64; 4], z: &[f64; 4], bounds: &Bounds, free: &[bool; 4]) -> [f64; 4] {
    let active = bounds.active(z, g);
    let mut pg = *g;
    for i in 0..4 {
        if active[i] || !free[i] {
            pg[i] = 0.0;
        }
    }
    pg
}

fn bfgs_run<F>(f: &mut F, z0: [f64; 4], config: &FitConfig, bounds: &Bounds) -> RunOutcome
where
    F: FnMut(&[f64; 4]) -> f64,
{
    let free = &config.free;
    let mut z = z0;
    bounds.project(&mut z);
    let mut fz = f(&z);
    if !fz.is_finite() {
        return RunOutcome { z, f: fz, iterations: 0, converged: false, gnorm: f64::INFINITY };
    }
    let mut g = projected_gradient(&fd_gradient(f, &z, config.fd_step, free), &z, bounds, free);
    let mut h = identity();
    let mut first = true;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let gnorm = norm(&g);
        let mut d = mat_vec_neg(&h, &g);
        if first {
            let s = 1.0 / gnorm.max(1.0);
            d.iter_mut().for_each(|v| *v *= s);
        }
        let mut slope: f64 = (0..4).map(|i| d[i] * g[i]).sum();
        if !(slope < 0.0) {
            h = identity();
            d = g.map(|v| -v / gnorm.max(1.0));
            slope = (0..4).map(|i| d[i] * g[i]).sum();
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut zt = [0.0; 4];
            for i in 0..4 {
                zt[i] = z[i] + t * d[i];
            }
            bounds.project(&mut zt);
            let ft = f(&zt);
            let decrease: f64 = (0..4).map(|i| g[i] * (zt[i] - z[i])).sum();
            if ft.is_finite() && ft <= fz + ARMIJO_C1 * decrease.min(0.0) {
                accepted = Some((zt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((zn, fnew)) = accepted else {
            // No acceptable step: either at machine precision or stuck.
            return RunOutcome { z, f: fz, iterations, converged: gnorm < config.gtol, gnorm };
        };
        let gn = projected_gradient(&fd_gradient(f, &zn, config.fd_step, free), &zn, bounds, free);
        let rel_change = (fz - fnew).abs() / fz.abs().max(1.0);
        let s: [f64; 4] = std::array::from_fn(|i| zn[i] - z[i]);
        let y: [f64; 4] = std::array::from_fn(|i| gn[i] - g[i]);
        let sy: f64 = (0..4).map(|i| s[i] * y[i]).sum();
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if first {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                h = identity();
                for i in 0..4 {
                    h[i][i] = sy / yy;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            first = false;
        }
        z = zn;
        fz = fnew;
        g = gn;
        let gnorm = norm(&g);
        if rel_change < config.ftol && gnorm < config.gtol {
            return RunOutcome { z, f: fz, iterations, converged: true, gnorm };
        }
    }
    let gnorm = norm(&g);
    RunOutcome { z, f: fz, iterations, converged: false, gnorm }
}

fn identity() -> [[f64; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

fn mat_vec_neg(h: &[[f64; 4]; 4], g: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| -(0..4).map(|j| h[i][j] * g[j]).sum::<f64>())
}

/// Inverse-Hessian BFGS update `H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut [[f64; 4]; 4], s: &[f64; 4], y: &[f64; 4], sy: f64) {
    let rho = 1.0 / sy;
    let hy: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| h[i][j] * y[j]).sum());
    let yhy: f64 = (0..4).map(|i| y[i] * hy[i]).sum();
    for i in 0..4 {
        for j in 0..4 {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Minimizes `objective` on `data` starting from `init`.
///
/// Unconverged runs are restarted from `init` with each free positive
/// parameter scaled by an independent factor in `[0.5, 1.5]`. The best point
/// over all runs is returned, and it never scores worse than `init`.
pub fn fit(objective: &Objective, data: &Dataset, init: &ModelParams, config: &FitConfig) -> Result<FitResult> {
    init.validate()?;
    if init.tau2 <= 0.0 && config.free[LOG_TAU2] {
        return Err(Error::InvalidParameter("a free nugget needs a positive starting value".into()));
    }
    let nu = init.theta.nu;
    let prepared = objective.prepare(data)?;
    let mut f = unconstrained_objective(&prepared, nu);
    let bounds = Bounds::new(config.phi_cap);
    let z_init = safe_unconstrained(init);
    let mut z_start = z_init;
    bounds.project(&mut z_start);
    let f_init = f(&z_start);
    if !f_init.is_finite() {
        return Err(Error::Numerical(format!("{} is not finite at the starting point", objective.name())));
    }

    let mut rng = config.seed.rng();
    let mut best: Option<RunOutcome> = None;
    let mut restarts_used = 0;
    let mut total_iterations = 0;
    for attempt in 0..=config.max_restarts {
        let mut z0 = z_init;
        if attempt > 0 {
            restarts_used = attempt;
            for i in [LOG_SIGMA2, LOG_PHI, LOG_TAU2] {
                if config.free[i] {
                    z0[i] += rng.gen_range(0.5f64..1.5).ln();
                }
            }
        }
        let run = bfgs_run(&mut f, z0, config, &bounds);
        total_iterations += run.iterations;
        let better = match &best {
            None => true,
            Some(b) => (run.converged && !b.converged) || (run.converged == b.converged && run.f < b.f),
        };
        let done = run.converged;
        if better {
            best = Some(run);
        }
        if done {
            break;
        }
    }
    let mut best = best.expect("at least one run");
    if !(best.f <= f_init) {
        best = RunOutcome { z: z_start, f: f_init, iterations: best.iterations, converged: false, gnorm: best.gnorm };
    }
    let mut psi_hat = from_unconstrained(&best.z, nu)?;
    let fixed = |i: usize| !config.free[i];
    if fixed(MU) {
        psi_hat.mu = init.mu;
    }
    if fixed(LOG_SIGMA2) {
        psi_hat.theta.sigma2 = init.theta.sigma2;
    }
    if fixed(LOG_PHI) {
        psi_hat.theta.phi = init.theta.phi;
    }
    if fixed(LOG_TAU2) {
        psi_hat.tau2 = init.tau2;
    }
    Ok(FitResult {
        psi_hat,
        nll: best.f,
        iterations: total_iterations,
        converged: best.converged,
        gradient_norm: best.gnorm,
        restarts_used,
        phi_capped: best.z[LOG_PHI] >= bounds.hi[LOG_PHI],
    })
}

/// `to_unconstrained` with a zero nugget mapped onto the lower box edge.
fn safe_unconstrained(psi: &ModelParams) -> [f64; 4] {
    let mut z = to_unconstrained(psi);
    if !z[LOG_TAU2].is_finite() {
        z[LOG_TAU2] = -LOG_BOX;
    }
    z
}
