use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Experiment, MetricsRow};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const LONG_CSV_HEADER: &str = "replicate,scenario,method,variant,rmspe,mu,sigma2,phi,tau2,kappa,seconds,converged";

pub const PARAMETER_NAMES: [&str; 5] = ["mu", "sigma2", "phi", "tau2", "kappa"];

/// Root mean squared prediction error.
pub fn rmspe(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} truth values",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("rmspe needs at least one value".into()));
    }
    let ss: f64 = predictions.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((ss / predictions.len() as f64).sqrt())
}

/// Relative bias and relative RMSE of `(μ, σ², φ, τ², κ)`; `None` where the true value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMetrics {
    pub bias: [Option<f64>; 5],
    pub rmse: [Option<f64>; 5],
}

fn components(p: &ModelParams) -> [f64; 5] {
    [p.mu, p.theta.sigma2, p.theta.phi, p.tau2, p.kappa()]
}

pub fn param_metrics(fits: &[ModelParams], truth: &ModelParams) -> Result<ParamMetrics> {
    if fits.is_empty() {
        return Err(Error::InvalidInput("parameter metrics need at least one fit".into()));
    }
    let t = components(truth);
    let k = fits.len() as f64;
    let mut bias = [None; 5];
    let mut rmse = [None; 5];
    for j in 0..5 {
        if t[j] == 0.0 {
            continue;
        }
        let rel: Vec<f64> = fits.iter().map(|f| (components(f)[j] - t[j]) / t[j]).collect();
        bias[j] = Some(rel.iter().sum::<f64>() / k);
        rmse[j] = Some((rel.iter().map(|r| r * r).sum::<f64>() / k).sqrt());
    }
    Ok(ParamMetrics { bias, rmse })
}

/// Mean and standard deviation of RMSPE for one arm of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub variant: String,
    /// Rows with a finite RMSPE.
    pub replicates: usize,
    pub failed: usize,
    pub mean_rmspe: f64,
    /// Sample standard deviation; 0 with a single replicate.
    pub sd_rmspe: f64,
}

type ArmKey = (String, String, String);

fn arm_key(r: &MetricsRow) -> ArmKey {
    (r.scenario.clone(), r.method.clone(), r.variant.clone())
}

/// Arms in order of first appearance with the indices of their rows.
fn group(rows: &[MetricsRow]) -> Vec<(ArmKey, Vec<usize>)> {
    let mut out: Vec<(ArmKey, Vec<usize>)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let key = arm_key(r);
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(i),
            None => out.push((key, vec![i])),
        }
    }
    out
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    group(rows)
        .into_iter()
        .map(|((scenario, method, variant), idx)| {
            let ok: Vec<f64> = idx.iter().map(|&i| rows[i].rmspe).filter(|v| v.is_finite()).collect();
            let k = ok.len();
            let mean = if k == 0 { f64::NAN } else { ok.iter().sum::<f64>() / k as f64 };
            let sd = match k {
                0 => f64::NAN,
                1 => 0.0,
                _ => (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt(),
            };
            SummaryRow { scenario, method, variant, replicates: k, failed: idx.len() - k, mean_rmspe: mean, sd_rmspe: sd }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_long_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(LONG_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let p = r.psi.as_ref().map_or([f64::NAN; 5], components);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.replicate,
            csv_field(&r.scenario),
            csv_field(&r.method),
            csv_field(&r.variant),
            r.rmspe,
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            r.seconds,
            r.converged
        )
        .expect("write to string");
    }
    out
}

fn write_summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("scenario,method,variant,replicates,failed,mean_rmspe,sd_rmspe\n");
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&s.scenario),
            csv_field(&s.method),
            csv_field(&s.variant),
            s.replicates,
            s.failed,
            s.mean_rmspe,
            s.sd_rmspe
        )
        .expect("write to string");
    }
    out
}

/// Per-replicate ranks (1 = lowest RMSPE, ties share the average rank) and
/// pairwise win rates among the arms of each scenario.
fn write_rank_csvs(rows: &[MetricsRow]) -> (String, String) {
    let arms = group(rows);
    let mut ranks = String::from("scenario,method,variant,median_rank,mean_rank,ranked\n");
    let mut wins = String::from("scenario,method,variant,versus_method,versus_variant,win_rate,compared\n");
    let mut scenarios: Vec<&str> = Vec::new();
    for ((s, _, _), _) in &arms {
        if !scenarios.contains(&s.as_str()) {
            scenarios.push(s);
        }
    }
    for scenario in scenarios {
        let local: Vec<&(ArmKey, Vec<usize>)> = arms.iter().filter(|(k, _)| k.0 == scenario).collect();
        let value = |arm: usize, rep: usize| -> Option<f64> {
            local[arm].1.iter().map(|&i| &rows[i]).find(|r| r.replicate == rep).map(|r| r.rmspe).filter(|v| v.is_finite())
        };
        let mut reps: Vec<usize> = local.iter().flat_map(|(_, idx)| idx.iter().map(|&i| rows[i].replicate)).collect();
        reps.sort_unstable();
        reps.dedup();
        let mut arm_ranks: Vec<Vec<f64>> = vec![Vec::new(); local.len()];
        for &rep in &reps {
            let vals: Vec<Option<f64>> = (0..local.len()).map(|a| value(a, rep)).collect();
            if vals.iter().any(Option::is_none) {
                continue;
            }
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            for a in 0..vals.len() {
                let below = vals.iter().filter(|&&v| v < vals[a]).count() as f64;
                let tied = vals.iter().filter(|&&v| v == vals[a]).count() as f64;
                arm_ranks[a].push(below + (tied + 1.0) / 2.0);
            }
        }
        for (a, ((_, method, variant), _)) in local.iter().enumerate() {
            let mut r = arm_ranks[a].clone();
            r.sort_by(f64::total_cmp);
            let (median, mean) = if r.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let k = r.len();
                let median = if k % 2 == 1 { r[k / 2] } else { 0.5 * (r[k / 2 - 1] + r[k / 2]) };
                (median, r.iter().sum::<f64>() / k as f64)
            };
            writeln!(ranks, "{},{},{},{},{},{}", csv_field(scenario), csv_field(method), csv_field(variant), median, mean, r.len())
                .expect("write to string");
            for (b, ((_, vm, vv), _)) in local.iter().enumerate() {
                if a == b {
                    continue;
                }
                let (mut won, mut compared) = (0usize, 0usize);
                for &rep in &reps {
                    if let (Some(x), Some(y)) = (value(a, rep), value(b, rep)) {
                        compared += 1;
                        if x < y {
                            won += 1;
                        }
                    }
                }
                let rate = if compared == 0 { f64::NAN } else { won as f64 / compared as f64 };
                writeln!(
                    wins,
                    "{},{},{},{},{},{},{}",
                    csv_field(scenario),
                    csv_field(method),
                    csv_field(variant),
                    csv_field(vm),
                    csv_field(vv),
                    rate,
                    compared
                )
                .expect("write to string");
            }
        }
    }
    (ranks, wins)
}

fn write_param_csv(exp: &Experiment, rows: &[MetricsRow]) -> Result<String> {
    let mut out = String::from("scenario,method,variant,parameter,relative_bias,relative_rmse\n");
    for ((scenario, method, variant), idx) in group(rows) {
        let phi = exp
            .scenarios()
            .iter()
            .find(|s| s.label() == scenario)
            .map(|s| s.phi)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scenario {scenario}")))?;
        let truth = exp.config().truth(phi)?;
        let fits: Vec<ModelParams> = idx.iter().filter_map(|&i| rows[i].psi).collect();
        let m = if fits.is_empty() { None } else { Some(param_metrics(&fits, &truth)?) };
        for (j, name) in PARAMETER_NAMES.iter().enumerate() {
            let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            let (b, r) = m.as_ref().map_or((None, None), |m| (m.bias[j], m.rmse[j]));
            writeln!(out, "{},{},{},{},{},{}", csv_field(&scenario), csv_field(&method), csv_field(&variant), name, fmt(b), fmt(r))
                .expect("write to string");
        }
    }
    Ok(out)
}

fn write_failures_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("scenario,replicate,method,variant,error\n");
    for r in rows.iter().filter(|r| r.failed()) {
        writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&r.scenario),
            r.replicate,
            csv_field(&r.method),
            csv_field(&r.variant),
            csv_field(r.error.as_deref().unwrap_or(""))
        )
        .expect("write to string");
    }
    out
}

pub(super) fn write_all(dir: &Path, exp: &Experiment, rows: &[MetricsRow], summary: &[SummaryRow]) -> Result<()> {
    fs::write(dir.join("results.csv"), write_long_csv(rows))?;
    fs::write(dir.join("summary.csv"), write_summary_csv(summary))?;
    let (ranks, wins) = write_rank_csvs(rows);
    fs::write(dir.join("ranks.csv"), ranks)?;
    fs::write(dir.join("winrates.csv"), wins)?;
    fs::write(dir.join("param_metrics.csv"), write_param_csv(exp, rows)?)?;
    fs::write(dir.join("failures.csv"), write_failures_csv(rows))?;
    let mut meta = exp.config().to_text();
    meta.push_str("# rmspe compares kriged mu + S against mu + S at every grid cell center\n");
    fs::write(dir.join("config.txt"), meta)?;
    Ok(())
}
