//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use isiw_core::{matern_cov, CovParams, Dataset, Location, ModelParams};
use rand::Rng;

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize) -> Dataset {
    let locs: Vec<Location> = (0..n).map(|_| Location::new(rng.gen(), rng.gen())).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..6.0)).collect();
    Dataset::new(locs, y).unwrap()
}

pub fn random_psi<R: Rng>(rng: &mut R) -> ModelParams {
    let nu = [0.5, 1.0, 1.5][rng.gen_range(0..3)];
    ModelParams::new(rng.gen_range(-1.0..5.0), rng.gen_range(0.3..3.0), rng.gen_range(0.03..0.5), nu, rng.gen_range(0.01..0.5))
        .unwrap()
}

/// Dense covariance rebuilt entry by entry from `matern_cov`.
pub fn dense_cov(locs: &[Location], theta: &CovParams, tau2: f64) -> Vec<Vec<f64>> {
    let n = locs.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let h = ((locs[i].x - locs[j].x).powi(2) + (locs[i].y - locs[j].y).powi(2)).sqrt();
                    matern_cov(h, theta).unwrap() + if i == j { tau2 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

/// Gauss–Jordan inverse with partial pivoting and the log-determinant.
pub fn inverse_and_logdet(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut logdet = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c];
        logdet += piv.abs().ln();
        for j in 0..n {
            m[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        m[r][j] -= f * m[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    (inv, logdet)
}

/// `−log N(y; μ1, Σ)` through an explicit inverse.
pub fn dense_nll(cov: &[Vec<f64>], y: &[f64], mu: f64) -> f64 {
    let (inv, logdet) = inverse_and_logdet(cov);
    let r: Vec<f64> = y.iter().map(|v| v - mu).collect();
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += r[i] * inv[i][j] * r[j];
        }
    }
    0.5 * (logdet + quad + n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Pairwise-marginal objective by a direct double loop over 2×2 systems.
pub fn pairwise_oracle(psi: &ModelParams, data: &Dataset, weights: Option<&[f64]>, cutoff: f64) -> f64 {
    let locs = data.locations();
    let y = data.values();
    let mut total = 0.0;
    for i in 0..data.len() {
        for j in 0..data.len() {
            if j <= i {
                continue;
            }
            let pair = [locs[i], locs[j]];
            if locs[i].dist(&locs[j]) > cutoff {
                continue;
            }
            let cov = dense_cov(&pair, &psi.theta, psi.tau2);
            let w = weights.map_or(1.0, |w| w[i] * w[j]);
            total += w * dense_nll(&cov, &[y[i], y[j]], psi.mu);
        }
    }
    total
}

/// Greedy maxmin ordering recomputing every minimum distance from scratch.
pub fn maxmin_oracle(locs: &[Location]) -> Vec<usize> {
    let n = locs.len();
    let cx = locs.iter().map(|p| p.x).sum::<f64>() / n as f64;
    let cy = locs.iter().map(|p| p.y).sum::<f64>() / n as f64;
    let c = Location::new(cx, cy);
    let mut first = 0;
    for i in 0..n {
        if locs[i].dist(&c) < locs[first].dist(&c) {
            first = i;
        }
    }
    let mut order = vec![first];
    while order.len() < n {
        let mut best = None;
        let mut best_d = -1.0;
        for i in 0..n {
            if order.contains(&i) {
                continue;
            }
            let d = order.iter().map(|&j| locs[i].dist(&locs[j])).fold(f64::INFINITY, f64::min);
            if d > best_d {
                best_d = d;
                best = Some(i);
            }
        }
        order.push(best.unwrap());
    }
    order
}

/// Gaussian draw at `locs` under `psi` through a dense Cholesky factor.
pub fn simulate_at<R: Rng>(rng: &mut R, locs: Vec<Location>, psi: &ModelParams) -> Dataset {
    use rand_distr::StandardNormal;
    let chol = isiw_core::build_cov_matrix(&locs, &psi.theta, psi.tau2).unwrap().cholesky().unwrap();
    let z: Vec<f64> = (0..locs.len()).map(|_| rng.sample(StandardNormal)).collect();
    let y = chol.lower_mul(&z).iter().map(|v| v + psi.mu).collect();
    Dataset::new(locs, y).unwrap()
}

pub fn uniform_locations<R: Rng>(rng: &mut R, n: usize) -> Vec<Location> {
    (0..n).map(|_| Location::new(rng.gen(), rng.gen())).collect()
}
