//! The simulation harness: for every scenario and replicate, simulate a
//! field, draw a preferentially sampled design, observe it with noise, fit
//! every configured arm, krige onto the cell centers and score the
//! predictions against `μ + S`.
//!
//! Each replicate draws from streams derived from `(root seed, scenario
//! label, replicate id)` only, so any row can be regenerated on its own and
//! results do not depend on thread scheduling.

mod config;
mod report;

pub use config::{ExperimentConfig, FitMethod, MethodSpec, Scenario, Timing, WeightSource};
pub use report::{
    param_metrics, rmspe, summarize, write_long_csv, ParamMetrics, SummaryRow, LONG_CSV_HEADER,
    PARAMETER_NAMES,
};

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{observe, FieldRealization, FieldSimulator};
use crate::inference::{default_init, fit, FitConfig};
use crate::intensity::{estimate_intensity, select_bandwidth, weights_from_intensity, Evaluation, WeightVector};
use crate::kriging::krige;
use crate::likelihood::{Objective, VecchiaPlan};
use crate::model::{Dataset, Location, ModelParams};
use crate::point_process::{compute_intensity, sample_points, SamplerKind};
use crate::rng::SeedStream;

/// One fitted arm of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub replicate: usize,
    pub scenario: String,
    pub method: String,
    pub variant: String,
    pub rmspe: f64,
    pub psi: Option<ModelParams>,
    pub seconds: f64,
    pub converged: bool,
    /// Relative errors of `(μ, σ², φ, τ², κ)` against the truth.
    pub relative_errors: Option<[f64; 5]>,
    pub error: Option<String>,
}

impl MetricsRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Stable 64-bit FNV-1a hash used to key random streams by label.
fn label_key(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

const FIELD_STREAM: u64 = 1;
const POINTS_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// An experiment with its field simulators factored once per range value.
pub struct Experiment {
    config: ExperimentConfig,
    scenarios: Vec<Scenario>,
    simulators: Vec<FieldSimulator>,
}

struct Replicate {
    truth: ModelParams,
    field: FieldRealization,
    data: Dataset,
    targets: Vec<Location>,
    surface: Vec<f64>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let scenarios = config.scenarios();
        let mut by_phi: Vec<(f64, FieldSimulator)> = Vec::new();
        for s in &scenarios {
            if !by_phi.iter().any(|(p, _)| *p == s.phi) {
                let sim = FieldSimulator::new(config.grid, config.truth(s.phi)?.theta)?;
                by_phi.push((s.phi, sim));
            }
        }
        let simulators = scenarios
            .iter()
            .map(|s| by_phi.iter().find(|(p, _)| *p == s.phi).map(|(_, sim)| sim.clone()).expect("simulator"))
            .collect();
        Ok(Experiment { config, scenarios, simulators })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    fn stream(&self, scenario: usize, replicate: usize) -> SeedStream {
        SeedStream::new(self.config.seed, 0)
            .derive(label_key(&self.scenarios[scenario].label()))
            .derive(replicate as u64)
    }

    fn simulate(&self, scenario: usize, replicate: usize) -> Result<Replicate> {
        let s = &self.scenarios[scenario];
        let truth = self.config.truth(s.phi)?;
        let base = self.stream(scenario, replicate);
        let field = self.simulators[scenario].draw(base.derive(FIELD_STREAM));
        let points = sample_points(&field, &s.sampler, base.derive(POINTS_STREAM))?;
        let data = observe(&field, &points, truth.mu, truth.tau2, base.derive(NOISE_STREAM))?;
        let targets = field.grid.centers();
        let surface = field.values.iter().map(|v| truth.mu + v).collect();
        Ok(Replicate { truth, field, data, targets, surface })
    }

    /// True sampling intensity at the sampled points (`exp(βS)` for the Thomas process).
    fn known_intensity(&self, scenario: usize, rep: &Replicate) -> Result<Vec<f64>> {
        let spec = &self.scenarios[scenario].sampler;
        let locs = rep.data.locations();
        if spec.kind == SamplerKind::Thomas {
            return locs.iter().map(|p| Ok((spec.beta * rep.field.value_at(p)?).exp())).collect();
        }
        let cells = compute_intensity(&rep.field, spec)?;
        locs.iter().map(|p| cells.at(p)).collect()
    }

    fn weights(&self, scenario: usize, rep: &Replicate, source: WeightSource) -> Result<WeightVector> {
        let locs = rep.data.locations();
        let domain = self.config.grid.domain;
        match source {
            WeightSource::Known => weights_from_intensity(&self.known_intensity(scenario, rep)?, self.config.threshold),
            WeightSource::Estimated(method) => {
                let bw = select_bandwidth(method, locs, &domain)?;
                estimate_intensity(locs, &domain, &bw, Evaluation::AtPoints)?.weights(self.config.threshold)
            }
        }
    }

    fn objective(&self, spec: &MethodSpec, n: usize, locs: &[Location], w: Option<WeightVector>) -> Result<(Objective, &'static str)> {
        let plan = || VecchiaPlan::build(locs, self.config.m.min(n - 1));
        Ok(match spec.method {
            FitMethod::Mle if n <= self.config.exact_max_n => (Objective::exact(), "exact"),
            FitMethod::Mle => (Objective::vecchia(plan()?, None), "vecchia"),
            FitMethod::MleExact => (Objective::exact(), "none"),
            FitMethod::Vecchia => (Objective::vecchia(plan()?, None), "none"),
            FitMethod::IsiwV => (Objective::vecchia(plan()?, w), ""),
            FitMethod::IsiwPm => (Objective::pairwise(self.config.pm_cutoff, w), ""),
        })
    }

    fn run_arm(
        &self,
        scenario: usize,
        replicate: usize,
        rep: &Replicate,
        spec: &MethodSpec,
        cache: &mut HashMap<WeightSource, Result<WeightVector>>,
    ) -> MetricsRow {
        let start = Instant::now();
        let mut row = MetricsRow {
            replicate,
            scenario: self.scenarios[scenario].label(),
            method: spec.method.name().to_string(),
            variant: spec.weights.map_or("none", |w| w.name()).to_string(),
            rmspe: f64::NAN,
            psi: None,
            seconds: 0.0,
            converged: false,
            relative_errors: None,
            error: None,
        };
        let outcome = (|| -> Result<(ModelParams, bool, f64)> {
            let weights = match spec.weights {
                Some(src) => Some(cache.entry(src).or_insert_with(|| self.weights(scenario, rep, src)).clone()?),
                None => None,
            };
            let d = &rep.data;
            let (objective, variant) = self.objective(spec, d.len(), d.locations(), weights)?;
            if !variant.is_empty() {
                row.variant = variant.to_string();
            }
            let domain = self.config.grid.domain;
            let init = default_init(d, &domain, self.config.nu)?;
            let cfg = FitConfig {
                seed: self.stream(scenario, replicate).derive(label_key(&spec.to_string())),
                ..FitConfig::for_domain(&domain)
            };
            let fitted = fit(&objective, d, &init, &cfg)?;
            let pred = krige(&fitted.psi_hat, d, &rep.targets)?;
            Ok((fitted.psi_hat, fitted.converged, rmspe(&pred.predictions, &rep.surface)?))
        })();
        match outcome {
            Ok((psi, converged, e)) => {
                row.rmspe = e;
                row.psi = Some(psi);
                row.converged = converged;
                row.relative_errors = Some(relative_errors(&psi, &rep.truth));
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        if self.config.timing == Timing::Wall {
            row.seconds = start.elapsed().as_secs_f64();
        }
        row
    }

    /// All arms of one replicate of one scenario, in configured method order.
    pub fn run_replicate(&self, scenario: usize, replicate: usize) -> Result<Vec<MetricsRow>> {
        if scenario >= self.scenarios.len() {
            return Err(Error::InvalidInput(format!("scenario index {scenario} out of range")));
        }
        let rep = self.simulate(scenario, replicate)?;
        let mut cache = HashMap::new();
        Ok(self
            .config
            .methods
            .iter()
            .map(|spec| self.run_arm(scenario, replicate, &rep, spec, &mut cache))
            .collect())
    }

    /// Every scenario × replicate in parallel, rows ordered by
    /// (scenario, replicate, method) in configuration order.
    pub fn run(&self) -> Result<Vec<MetricsRow>> {
        let cells: Vec<(usize, usize)> = (0..self.scenarios.len())
            .flat_map(|s| (0..self.config.replicates).map(move |r| (s, r)))
            .collect();
        let results: Vec<Result<Vec<MetricsRow>>> = cells.par_iter().map(|&(s, r)| self.run_replicate(s, r)).collect();
        let mut rows = Vec::new();
        for r in results {
            rows.extend(r?);
        }
        Ok(rows)
    }
}

fn relative_errors(est: &ModelParams, truth: &ModelParams) -> [f64; 5] {
    let rel = |e: f64, t: f64| (e - t) / t;
    [
        rel(est.mu, truth.mu),
        rel(est.theta.sigma2, truth.theta.sigma2),
        rel(est.theta.phi, truth.theta.phi),
        rel(est.tau2, truth.tau2),
        rel(est.kappa(), truth.kappa()),
    ]
}

/// Convenience wrapper that factors the field covariance for a single replicate.
pub fn run_replicate(config: &ExperimentConfig, scenario: usize, replicate: usize) -> Result<Vec<MetricsRow>> {
    Experiment::new(config.clone())?.run_replicate(scenario, replicate)
}

/// Run everything and write the reports into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let exp = Experiment::new(config.clone())?;
    let rows = exp.run()?;
    let summary = summarize(&rows);
    std::fs::create_dir_all(out_dir)?;
    report::write_all(out_dir, &exp, &rows, &summary)?;
    Ok(ExperimentOutput { rows, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
}
