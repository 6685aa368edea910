use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::intensity::{BandwidthMethod, DEFAULT_THRESHOLD};
use crate::likelihood::DEFAULT_M;
use crate::model::{Domain, ModelParams};
use crate::point_process::{SamplerKind, SamplerSpec};

/// Fitting strategy of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitMethod {
    /// Exact likelihood up to `exact_max_n` observations, unweighted Vecchia beyond.
    Mle,
    MleExact,
    Vecchia,
    IsiwV,
    IsiwPm,
}

impl FitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::Mle => "MLE",
            FitMethod::MleExact => "MLE-exact",
            FitMethod::Vecchia => "Vecchia",
            FitMethod::IsiwV => "ISIW-V",
            FitMethod::IsiwPm => "ISIW-PM",
        }
    }

    pub fn is_weighted(&self) -> bool {
        matches!(self, FitMethod::IsiwV | FitMethod::IsiwPm)
    }
}

/// Where inverse-intensity weights come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightSource {
    /// The true sampling intensity of the simulation.
    Known,
    Estimated(BandwidthMethod),
}

impl WeightSource {
    pub fn name(&self) -> &'static str {
        match self {
            WeightSource::Known => "known",
            WeightSource::Estimated(m) => m.name(),
        }
    }
}

impl FromStr for WeightSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("known") {
            return Ok(WeightSource::Known);
        }
        match s.parse::<BandwidthMethod>()? {
            BandwidthMethod::Fixed => Err(Error::Parse("weights cannot use a fixed bandwidth".into())),
            m => Ok(WeightSource::Estimated(m)),
        }
    }
}

/// One arm of the comparison: a fitting method and, if weighted, its weight source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodSpec {
    pub method: FitMethod,
    pub weights: Option<WeightSource>,
}

impl MethodSpec {
    pub fn unweighted(method: FitMethod) -> Self {
        MethodSpec { method, weights: None }
    }

    pub fn weighted(method: FitMethod, source: WeightSource) -> Self {
        MethodSpec { method, weights: Some(source) }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.weights {
            Some(w) => write!(f, "{}:{}", self.method.name(), w.name()),
            None => write!(f, "{}", self.method.name()),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// `NAME` or `NAME:SOURCE`, e.g. `MLE-exact`, `ISIW-V:known`, `ISIW-PM:diggle`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, source) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let method = match name.to_ascii_lowercase().as_str() {
            "mle" => FitMethod::Mle,
            "mle-exact" | "exact" => FitMethod::MleExact,
            "vecchia" => FitMethod::Vecchia,
            "isiw-v" => FitMethod::IsiwV,
            "isiw-pm" => FitMethod::IsiwPm,
            other => return Err(Error::Parse(format!("unknown method '{other}'"))),
        };
        match (method.is_weighted(), source) {
            (true, Some(src)) => Ok(MethodSpec::weighted(method, src.parse()?)),
            (true, None) => Err(Error::Parse(format!("{name} needs a weight source, e.g. {name}:known"))),
            (false, None) => Ok(MethodSpec::unweighted(method)),
            (false, Some(_)) => Err(Error::Parse(format!("{name} takes no weight source"))),
        }
    }
}

/// Whether rows record wall-clock fitting time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    Wall,
    /// Every `seconds` entry is written as 0 so outputs are byte-reproducible.
    Off,
}

/// One cell of the simulation design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub phi: f64,
    pub sampler: SamplerSpec,
}

impl Scenario {
    pub fn label(&self) -> String {
        format!(
            "{}_beta{}_n{}_phi{}",
            self.sampler.kind.name(),
            self.sampler.beta,
            self.sampler.n,
            self.phi
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub replicates: usize,
    pub grid: GridSpec,
    pub mu: f64,
    pub sigma2: f64,
    pub nu: f64,
    pub tau2: f64,
    pub phis: Vec<f64>,
    pub samplers: Vec<SamplerKind>,
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub ns: Vec<usize>,
    pub parent_rate: f64,
    pub offspring_scale: f64,
    pub methods: Vec<MethodSpec>,
    pub threshold: f64,
    pub m: usize,
    /// Distance cutoff for pairwise-marginal terms; `None` uses all pairs.
    pub pm_cutoff: Option<f64>,
    /// Largest `n` at which the `MLE` arm uses the exact likelihood.
    pub exact_max_n: usize,
    pub seed: u64,
    pub timing: Timing,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            replicates: 50,
            grid: GridSpec { domain: Domain::unit_square(), nx: 48, ny: 48 },
            mu: 4.0,
            sigma2: 1.5,
            nu: 1.0,
            tau2: 0.1,
            phis: vec![0.02, 0.15],
            samplers: vec![SamplerKind::Lgcp],
            alpha: 0.0,
            betas: vec![1.0],
            ns: vec![100],
            parent_rate: 25.0,
            offspring_scale: 0.1,
            methods: vec![
                MethodSpec::unweighted(FitMethod::Mle),
                MethodSpec::weighted(FitMethod::IsiwV, WeightSource::Known),
            ],
            threshold: DEFAULT_THRESHOLD,
            m: DEFAULT_M,
            pm_cutoff: None,
            exact_max_n: 200,
            seed: 1,
            timing: Timing::Wall,
        }
    }
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Result<Vec<T>> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Parse(format!("bad value '{s}' for {key}"))))
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(Error::Parse(format!("{key} needs at least one value")));
    }
    Ok(items)
}

fn one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad value '{v}' for {key}")))
}

impl ExperimentConfig {
    /// Parse flat `key = value` text. Unset keys keep their defaults; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            c.set(key.trim(), value.trim())
                .map_err(|e| Error::Parse(format!("line {}: {}", lineno + 1, e)))?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "replicates" => self.replicates = one(key, v)?,
            "grid" => {
                let (nx, ny) = match v.split_once(['x', 'X']) {
                    Some((a, b)) => (one(key, a)?, one(key, b)?),
                    None => {
                        let n = one(key, v)?;
                        (n, n)
                    }
                };
                self.grid = GridSpec::new(self.grid.domain, nx, ny)?;
            }
            "domain" => {
                let b: Vec<f64> = list(key, v)?;
                if b.len() != 4 {
                    return Err(Error::Parse("domain needs x_min,x_max,y_min,y_max".into()));
                }
                self.grid = GridSpec::new(Domain::new(b[0], b[1], b[2], b[3])?, self.grid.nx, self.grid.ny)?;
            }
            "mu" => self.mu = one(key, v)?,
            "sigma2" => self.sigma2 = one(key, v)?,
            "nu" => self.nu = one(key, v)?,
            "tau2" => self.tau2 = one(key, v)?,
            "phi" => self.phis = list(key, v)?,
            "sampler" => {
                self.samplers = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "alpha" => self.alpha = one(key, v)?,
            "beta" => self.betas = list(key, v)?,
            "n" => self.ns = list(key, v)?,
            "parent_rate" => self.parent_rate = one(key, v)?,
            "offspring_scale" => self.offspring_scale = one(key, v)?,
            "methods" => {
                self.methods = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "threshold" => self.threshold = one(key, v)?,
            "m" => self.m = one(key, v)?,
            "pm_cutoff" => {
                self.pm_cutoff = match v {
                    "none" | "" => None,
                    _ => Some(one(key, v)?),
                }
            }
            "exact_max_n" => self.exact_max_n = one(key, v)?,
            "seed" => self.seed = one(key, v)?,
            "timing" => {
                self.timing = match v {
                    "wall" => Timing::Wall,
                    "off" => Timing::Off,
                    _ => return Err(Error::Parse(format!("timing must be wall or off, got '{v}'"))),
                }
            }
            _ => return Err(Error::Parse(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.grid.nx < 2 || self.grid.ny < 2 {
            return Err(Error::InvalidParameter("the field grid needs at least 2 cells per axis".into()));
        }
        for &phi in &self.phis {
            self.truth(phi)?;
        }
        if self.samplers.is_empty() || self.betas.is_empty() || self.ns.is_empty() || self.phis.is_empty() {
            return Err(Error::InvalidParameter("every design list needs at least one entry".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods configured".into()));
        }
        if self.ns.iter().any(|&n| n < 5) {
            return Err(Error::InvalidParameter("sample sizes must be >= 5".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {}", self.threshold)));
        }
        if let Some(c) = self.pm_cutoff {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter("pm_cutoff must be > 0".into()));
            }
        }
        for s in self.scenarios() {
            s.sampler.validate()?;
        }
        Ok(())
    }

    pub fn truth(&self, phi: f64) -> Result<ModelParams> {
        ModelParams::new(self.mu, self.sigma2, phi, self.nu, self.tau2)
    }

    /// All design cells, `φ` outermost and `n` innermost.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &phi in &self.phis {
            for &kind in &self.samplers {
                for &beta in &self.betas {
                    for &n in &self.ns {
                        let mut sampler = SamplerSpec::new(kind, beta, n);
                        sampler.alpha = self.alpha;
                        sampler.parent_rate = self.parent_rate;
                        sampler.offspring_scale = self.offspring_scale;
                        out.push(Scenario { phi, sampler });
                    }
                }
            }
        }
        out
    }

    /// The configuration as `key = value` text that [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let d = &self.grid.domain;
        let lines = [
            format!("replicates = {}", self.replicates),
            format!("grid = {}x{}", self.grid.nx, self.grid.ny),
            format!("domain = {},{},{},{}", d.x_min, d.x_max, d.y_min, d.y_max),
            format!("mu = {}", self.mu),
            format!("sigma2 = {}", self.sigma2),
            format!("nu = {}", self.nu),
            format!("tau2 = {}", self.tau2),
            format!("phi = {}", join(self.phis.iter().map(|v| v.to_string()).collect())),
            format!("sampler = {}", join(self.samplers.iter().map(|v| v.name().to_string()).collect())),
            format!("alpha = {}", self.alpha),
            format!("beta = {}", join(self.betas.iter().map(|v| v.to_string()).collect())),
            format!("n = {}", join(self.ns.iter().map(|v| v.to_string()).collect())),
            format!("parent_rate = {}", self.parent_rate),
            format!("offspring_scale = {}", self.offspring_scale),
            format!("methods = {}", join(self.methods.iter().map(|v| v.to_string()).collect())),
            format!("threshold = {}", self.threshold),
            format!("m = {}", self.m),
            format!("pm_cutoff = {}", self.pm_cutoff.map_or("none".to_string(), |c| c.to_string())),
            format!("exact_max_n = {}", self.exact_max_n),
            format!("seed = {}", self.seed),
            format!("timing = {}", if self.timing == Timing::Wall { "wall" } else { "off" }),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}
