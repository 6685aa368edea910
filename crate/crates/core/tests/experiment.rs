use std::collections::HashMap;

use isiw_core::experiment::{run_experiment, summarize, Experiment, ExperimentConfig, LONG_CSV_HEADER};

fn small(extra: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("replicates = 4\ngrid = 16\nphi = 0.15\nn = 40\ntiming = off\n{extra}")).unwrap()
}

#[test]
fn unit_known_weights_collapse_to_unweighted() {
    let c = small("beta = 0\nmethods = Vecchia, ISIW-V:known, ISIW-PM:known");
    let exp = Experiment::new(c).unwrap();
    for rep in 0..2 {
        let rows = exp.run_replicate(0, rep).unwrap();
        assert_eq!(rows[0].psi, rows[1].psi);
        assert!(rows[1].psi.is_some());
        assert_eq!(rows[0].rmspe.to_bits(), rows[1].rmspe.to_bits());
    }
}

#[test]
fn replicates_are_reproducible() {
    let exp = Experiment::new(small("methods = MLE, ISIW-V:known, ISIW-V:diggle")).unwrap();
    let a = exp.run_replicate(0, 3).unwrap();
    let b = exp.run_replicate(0, 3).unwrap();
    assert_eq!(a, b);
    let fresh = isiw_core::run_replicate(exp.config(), 0, 3).unwrap();
    assert_eq!(a, fresh);
    assert_ne!(a, exp.run_replicate(0, 2).unwrap());
    assert_eq!(a[0].variant, "exact");
}

#[test]
fn single_row_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let c = small("replicates = 1\nmethods = MLE-exact");
    let out = run_experiment(&c, dir).unwrap();
    assert_eq!(out.rows.len(), 1);
    assert_eq!(out.summary.len(), 1);
    assert_eq!(out.summary[0].mean_rmspe, out.rows[0].rmspe);
    let csv = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), LONG_CSV_HEADER);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn summary_matches_independent_aggregation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let c = small("phi = 0.15, 0.05\nmethods = MLE-exact, ISIW-V:known, ISIW-PM:scott");
    run_experiment(&c, dir).unwrap();
    let long = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    let mut groups: HashMap<(String, String, String), Vec<f64>> = HashMap::new();
    for line in long.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 12);
        let v: f64 = f[4].parse().unwrap();
        groups.entry((f[1].into(), f[2].into(), f[3].into())).or_default().push(v);
    }
    let summary = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut seen = 0;
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let vals = &groups[&(f[0].to_string(), f[1].to_string(), f[2].to_string())];
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let sd = (vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)).sqrt();
        assert!((f[5].parse::<f64>().unwrap() - mean).abs() < 1e-12);
        assert!((f[6].parse::<f64>().unwrap() - sd).abs() < 1e-12);
        seen += 1;
    }
    assert_eq!(seen, groups.len());
    for name in ["ranks.csv", "winrates.csv", "param_metrics.csv", "failures.csv", "config.txt"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let cfg = std::fs::read_to_string(dir.join("config.txt")).unwrap();
    assert_eq!(ExperimentConfig::parse(&cfg).unwrap(), c);
}

#[test]
fn rows_are_ordered_and_timed() {
    let c = small("replicates = 3\nphi = 0.15, 0.05\nmethods = MLE-exact, ISIW-V:known\ntiming = wall");
    let exp = Experiment::new(c).unwrap();
    let rows = exp.run().unwrap();
    assert_eq!(rows.len(), 12);
    let labels: Vec<String> = exp.scenarios().iter().map(|s| s.label()).collect();
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.scenario, labels[i / 6]);
        assert_eq!(r.replicate, (i % 6) / 2);
        assert_eq!(r.method, ["MLE-exact", "ISIW-V"][i % 2]);
        assert!(!r.failed());
        assert!(r.seconds > 0.0 && r.seconds.is_finite());
        assert!(r.rmspe >= 0.0);
    }
    let s = summarize(&rows);
    assert_eq!(s.len(), 4);
    assert!(s.iter().all(|x| x.replicates == 3 && x.failed == 0));
}

#[test]
fn thomas_and_scp_scenarios_run() {
    let c = small("replicates = 1\nsampler = thomas, scp\nmethods = ISIW-V:known, ISIW-PM:CvL");
    let rows = Experiment::new(c).unwrap().run().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| !r.failed() && r.rmspe.is_finite()), "{rows:?}");
}
