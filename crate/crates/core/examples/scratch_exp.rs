use isiw_core::experiment::*;
use std::time::Instant;
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let text = std::fs::read_to_string(&a[1]).unwrap();
    let c = ExperimentConfig::parse(&text).unwrap();
    let t = Instant::now();
    let out = run_experiment(&c, std::path::Path::new(&a[2])).unwrap();
    for s in &out.summary { println!("{:?}", s); }
    println!("{:.1}s", t.elapsed().as_secs_f64());
}
