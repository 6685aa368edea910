use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use isiw_core::experiment::{run_experiment, ExperimentConfig};
use isiw_core::intensity::DEFAULT_THRESHOLD;
use isiw_core::likelihood::DEFAULT_M;
use isiw_core::{
    default_init, estimate_intensity, fit, krige, observe, sample_points, select_bandwidth, BandwidthMethod,
    BandwidthSpec, CovParams, Dataset, Domain, Evaluation, FieldSimulator, FitConfig, GridSpec, Location,
    ModelParams, Objective, SamplerKind, SamplerSpec, SeedStream, VecchiaPlan, WeightVector,
};

use crate::io::{read_columns, read_dataset, read_points, write_table};
use crate::{Cli, CliError, Command, FieldArgs, FitArgs, Global, IntensityArgs, KrigeArgs, SampleArgs};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    fs::create_dir_all(&g.out_dir)?;
    match cli.command {
        Command::Simulate(a) => simulate(&g, &a),
        Command::Sample(a) => sample(&g, &a),
        Command::Intensity(a) => intensity(&g, &a),
        Command::Fit(a) => fit_cmd(&g, &a),
        Command::Krige(a) => krige_cmd(&g, &a),
        Command::Experiment => experiment(&g),
    }
}

fn parse_domain(s: &str) -> Result<Domain, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad domain '{s}'")))?;
    if v.len() != 4 {
        return Err(CliError::Usage("domain needs x_min,x_max,y_min,y_max".into()));
    }
    Ok(Domain::new(v[0], v[1], v[2], v[3])?)
}

fn domain_for(spec: &Option<String>, locs: &[Location]) -> Result<Domain, CliError> {
    match spec {
        Some(s) => parse_domain(s),
        None => Ok(Domain::bounding(locs, 0.01)?),
    }
}

fn field(g: &Global, a: &FieldArgs) -> Result<isiw_core::FieldRealization, CliError> {
    let grid = GridSpec::new(parse_domain(&a.domain)?, a.grid, a.grid)?;
    let sim = FieldSimulator::new(grid, CovParams::new(a.sigma2, a.phi, a.nu)?)?;
    Ok(sim.draw(SeedStream::new(g.seed(), 0).derive(1)))
}

fn simulate(g: &Global, a: &FieldArgs) -> Result<(), CliError> {
    let f = field(g, a)?;
    write_table(&g.out_dir.join("field.csv"), &["s"], &f.grid.centers(), &[&f.values])?;
    println!("wrote {} cells to {}", f.values.len(), g.out_dir.join("field.csv").display());
    Ok(())
}

fn sample(g: &Global, a: &SampleArgs) -> Result<(), CliError> {
    let f = field(g, &a.field)?;
    let kind: SamplerKind = a.sampler.parse()?;
    let spec = SamplerSpec::new(kind, a.beta, a.n);
    let root = SeedStream::new(g.seed(), 0);
    let points = sample_points(&f, &spec, root.derive(2))?;
    let data = observe(&f, &points, a.mu, a.tau2, root.derive(3))?;
    write_table(&g.out_dir.join("field.csv"), &["s"], &f.grid.centers(), &[&f.values])?;
    write_table(&g.out_dir.join("points.csv"), &[], &points, &[])?;
    write_table(&g.out_dir.join("data.csv"), &["value"], data.locations(), &[data.values()])?;
    println!("wrote {} {} points to {}", points.len(), kind.name(), g.out_dir.display());
    Ok(())
}

fn bandwidth(g: &Global, default: BandwidthMethod, locs: &[Location], domain: &Domain) -> Result<BandwidthSpec, CliError> {
    match &g.bandwidth {
        Some(s) => match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(BandwidthSpec::fixed(h)),
            Ok(_) => Err(CliError::Usage(format!("bandwidth must be positive, got {s}"))),
            Err(_) => {
                let m: BandwidthMethod = s.parse().map_err(|e: isiw_core::Error| CliError::Usage(e.to_string()))?;
                Ok(select_bandwidth(m, locs, domain)?)
            }
        },
        None => Ok(select_bandwidth(default, locs, domain)?),
    }
}

fn intensity(g: &Global, a: &IntensityArgs) -> Result<(), CliError> {
    let points = read_points(&a.points)?;
    let domain = domain_for(&a.domain, &points)?;
    let grid = GridSpec::new(domain, a.grid, a.grid)?;
    let bw = bandwidth(g, BandwidthMethod::Diggle, &points, &domain)?;
    let est = estimate_intensity(&points, &domain, &bw, Evaluation::Grid(grid))?;
    let w = est.weights(g.threshold.unwrap_or(DEFAULT_THRESHOLD))?;
    let (grid, lambda) = est.on_grid.as_ref().expect("grid evaluation requested");
    write_table(&g.out_dir.join("lambda.csv"), &["lambda"], &grid.centers(), &[lambda])?;
    write_table(&g.out_dir.join("weights.csv"), &["weight"], &points, &[&w.weights])?;
    println!("bandwidth = {}", bw.h);
    println!("selector = {}", bw.method.name());
    println!("at_boundary = {}", bw.at_boundary);
    println!("max_weight = {}", w.max());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Method {
    Exact,
    Vecchia,
    IsiwV,
    IsiwPm,
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "mle" | "mle-exact" | "exact" => Ok(Method::Exact),
        "vecchia" => Ok(Method::Vecchia),
        "isiw-v" => Ok(Method::IsiwV),
        "isiw-pm" => Ok(Method::IsiwPm),
        _ => Err(CliError::Usage(format!("unknown method '{s}'"))),
    }
}

fn weights_for(g: &Global, data: &Dataset, domain: &Domain) -> Result<(WeightVector, String), CliError> {
    let threshold = g.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let source = g.weights.as_deref().unwrap_or("diggle");
    let path = Path::new(source);
    if path.is_file() {
        let cols = read_columns(path, &["weight"])?;
        if cols[0].len() != data.len() {
            return Err(CliError::Input(format!("{} weights for {} observations", cols[0].len(), data.len())));
        }
        return Ok((WeightVector { weights: cols[0].clone(), threshold: 0.0 }, "file".into()));
    }
    let method: BandwidthMethod = source
        .parse()
        .map_err(|_| CliError::Usage(format!("--weights '{source}' is neither a selector nor a file")))?;
    let bw = match g.bandwidth.as_deref().and_then(|s| s.parse::<f64>().ok()) {
        Some(h) if h > 0.0 && h.is_finite() => BandwidthSpec::fixed(h),
        Some(h) => return Err(CliError::Usage(format!("bandwidth must be positive, got {h}"))),
        None => select_bandwidth(method, data.locations(), domain)?,
    };
    let est = estimate_intensity(data.locations(), domain, &bw, Evaluation::AtPoints)?;
    Ok((est.weights(threshold)?, bw.method.name().to_string()))
}

fn fit_cmd(g: &Global, a: &FitArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let n = data.len();
    if n < 2 {
        return Err(CliError::Input("need at least 2 observations".into()));
    }
    let domain = domain_for(&a.domain, data.locations())?;
    let method = match &g.method {
        Some(s) => parse_method(s)?,
        None if n <= 200 => Method::Exact,
        None => Method::Vecchia,
    };
    if !matches!(method, Method::IsiwV | Method::IsiwPm) && g.weights.is_some() {
        return Err(CliError::Usage("--weights applies only to ISIW-V and ISIW-PM".into()));
    }
    let m = g.m.unwrap_or(DEFAULT_M).min(n - 1);
    if m == 0 {
        return Err(CliError::Usage("--m must be >= 1".into()));
    }
    let (objective, variant) = match method {
        Method::Exact => (Objective::exact(), "none".to_string()),
        Method::Vecchia => (Objective::vecchia(VecchiaPlan::build(data.locations(), m)?, None), "none".to_string()),
        Method::IsiwV => {
            let (w, v) = weights_for(g, &data, &domain)?;
            (Objective::vecchia(VecchiaPlan::build(data.locations(), m)?, Some(w)), v)
        }
        Method::IsiwPm => {
            let (w, v) = weights_for(g, &data, &domain)?;
            (Objective::pairwise(a.cutoff, Some(w)), v)
        }
    };
    let init = default_init(&data, &domain, a.nu)?;
    let cfg = FitConfig { seed: SeedStream::new(g.seed(), 0).derive(4), ..FitConfig::for_domain(&domain) };
    let r = fit(&objective, &data, &init, &cfg)?;
    let p = &r.psi_hat;
    let mut report = String::new();
    for (k, v) in [
        ("method", objective.name().to_string()),
        ("variant", variant),
        ("n", n.to_string()),
        ("mu", p.mu.to_string()),
        ("sigma2", p.theta.sigma2.to_string()),
        ("phi", p.theta.phi.to_string()),
        ("nu", p.theta.nu.to_string()),
        ("tau2", p.tau2.to_string()),
        ("kappa", p.kappa().to_string()),
        ("nll", r.nll.to_string()),
        ("iterations", r.iterations.to_string()),
        ("converged", r.converged.to_string()),
        ("gradient_norm", r.gradient_norm.to_string()),
        ("restarts", r.restarts_used.to_string()),
        ("phi_capped", r.phi_capped.to_string()),
    ] {
        writeln!(report, "{k} = {v}").expect("write to string");
    }
    fs::write(g.out_dir.join("fit.txt"), &report)?;
    print!("{report}");
    Ok(())
}

fn parse_params(spec: &str) -> Result<ModelParams, CliError> {
    let text = if Path::new(spec).is_file() { fs::read_to_string(spec)? } else { spec.replace(',', "\n") };
    let mut kv = HashMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| -> Result<f64, CliError> {
        kv.get(k)
            .ok_or_else(|| CliError::Usage(format!("parameters lack '{k}'")))?
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("parameter '{k}' is not a number")))
    };
    let nu = if kv.contains_key("nu") { get("nu")? } else { 1.0 };
    Ok(ModelParams::new(get("mu")?, get("sigma2")?, get("phi")?, nu, get("tau2")?)?)
}

fn krige_cmd(g: &Global, a: &KrigeArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let psi = parse_params(&a.params)?;
    let domain = domain_for(&a.domain, data.locations())?;
    let grid = GridSpec::new(domain, a.grid, a.grid)?;
    let out = krige(&psi, &data, &grid.centers())?;
    write_table(&g.out_dir.join("surface.csv"), &["pred", "var"], &out.targets, &[&out.predictions, &out.variances])?;
    println!("wrote {} predictions to {}", out.len(), g.out_dir.join("surface.csv").display());
    Ok(())
}

fn experiment(g: &Global) -> Result<(), CliError> {
    let mut config = match &g.config {
        Some(p) => ExperimentConfig::parse(
            &fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )?,
        None => return Err(CliError::Usage("experiment needs --config".into())),
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(m) = g.m {
        config.m = m;
    }
    if let Some(t) = g.threshold {
        config.threshold = t;
    }
    config.validate()?;
    let out = run_experiment(&config, &g.out_dir)?;
    for s in &out.summary {
        println!(
            "{} {}:{} mean_rmspe={} sd={} ok={} failed={}",
            s.scenario, s.method, s.variant, s.mean_rmspe, s.sd_rmspe, s.replicates, s.failed
        );
    }
    Ok(())
}
