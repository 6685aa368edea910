//! Vecchia approximation: `f(y) ≈ Π_i f(y_{p(i)} | y_{q(i)})`, and its
//! inverse-intensity weighted form in which ordered position `i` contributes
//! `w_{p(i)} [log f(y_{p(i)}, y_{q(i)}) − log f(y_{q(i)})]`.

use super::ordering::VecchiaPlan;
use super::LN_2PI;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, SymMatrix};
use crate::model::{Dataset, Location, MaternKernel, ModelParams};
use std::collections::HashMap;

#[derive(Debug, Clone)]
struct Block {
    /// Original indices, conditioning set first and the response last.
    members: Vec<usize>,
    /// Distance-table slot of each strictly-lower entry, row-major.
    slots: Vec<usize>,
}

/// Vecchia likelihood bound to a dataset and plan.
#[derive(Debug, Clone)]
pub struct VecchiaLikelihood<'a> {
    data: &'a Dataset,
    blocks: Vec<Block>,
    dist: Vec<f64>,
    /// Weight of each ordered position (all ones when unweighted).
    weights: Vec<f64>,
    max_block: usize,
}

impl<'a> VecchiaLikelihood<'a> {
    pub fn new(data: &'a Dataset, plan: &VecchiaPlan, weights: Option<&[f64]>) -> Result<Self> {
        let n = data.len();
        plan.validate(n)?;
        let locs = data.locations();
        let mut table: HashMap<(usize, usize), usize> = HashMap::new();
        let mut dist = Vec::new();
        let mut blocks = Vec::with_capacity(n);
        for (k, &i) in plan.order.iter().enumerate() {
            let mut members = plan.cond_sets[k].clone();
            members.push(i);
            let mut slots = Vec::with_capacity(members.len() * (members.len() - 1) / 2);
            for r in 0..members.len() {
                for c in 0..r {
                    let key = (members[r].min(members[c]), members[r].max(members[c]));
                    let slot = *table.entry(key).or_insert_with(|| {
                        dist.push(locs[key.0].dist(&locs[key.1]));
                        dist.len() - 1
                    });
                    slots.push(slot);
                }
            }
            blocks.push(Block { members, slots });
        }
        let weights = match weights {
            Some(w) => plan.order.iter().map(|&i| w[i]).collect(),
            None => vec![1.0; n],
        };
        let max_block = blocks.iter().map(|b| b.members.len()).max().unwrap_or(0);
        Ok(VecchiaLikelihood { data, blocks, dist, weights, max_block })
    }

    /// `(log f(y_q), log f(y_q, y_i))` for every ordered position.
    pub fn terms(&self, psi: &ModelParams) -> Result<Vec<(f64, f64)>> {
        let kernel = MaternKernel::new(psi.theta.nu);
        let (s2, phi) = (psi.theta.sigma2, psi.theta.phi);
        let cov: Vec<f64> = self.dist.iter().map(|&h| kernel.cov(h, s2, phi)).collect();
        let diag = s2 + psi.tau2;
        let y = self.data.values();
        let mut buf = vec![0.0; self.max_block * self.max_block];
        let mut z = vec![0.0; self.max_block];
        let mut out = Vec::with_capacity(self.blocks.len());
        for (k, block) in self.blocks.iter().enumerate() {
            let b = block.members.len();
            let a = &mut buf[..b * b];
            let mut s = 0;
            for r in 0..b {
                for c in 0..r {
                    a[r * b + c] = cov[block.slots[s]];
                    s += 1;
                }
                a[r * b + r] = diag;
            }
            cholesky_in_place(a, b).map_err(|_| Error::DegenerateConditional { position: k })?;
            // Forward solve L z = y − μ, accumulating the marginal log density
            // of the leading rows as we go.
            let mut log_q = 0.0;
            let mut log_joint = 0.0;
            for r in 0..b {
                let mut v = y[block.members[r]] - psi.mu;
                for c in 0..r {
                    v -= a[r * b + c] * z[c];
                }
                let lrr = a[r * b + r];
                z[r] = v / lrr;
                let term = -0.5 * z[r] * z[r] - lrr.ln() - 0.5 * LN_2PI;
                if r + 1 < b {
                    log_q += term;
                }
                log_joint += term;
            }
            out.push((log_q, log_joint));
        }
        Ok(out)
    }

    pub fn nll(&self, psi: &ModelParams) -> Result<f64> {
        let terms = self.terms(psi)?;
        let total: f64 = terms
            .iter()
            .zip(&self.weights)
            .map(|((log_q, log_joint), w)| w * (log_joint - log_q))
            .sum();
        Ok(-total)
    }
}

/// Negative log Vecchia likelihood, weighted when `weights` is given.
pub fn vecchia_nll(
    psi: &ModelParams,
    data: &Dataset,
    plan: &VecchiaPlan,
    weights: Option<&crate::intensity::WeightVector>,
) -> Result<f64> {
    psi.validate()?;
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::InvalidInput(format!("{} weights for {} observations", w.len(), data.len())));
        }
    }
    VecchiaLikelihood::new(data, plan, weights.map(|w| w.weights.as_slice()))?.nll(psi)
}

/// Covariance of the joint Gaussian implied by the Vecchia factorization,
/// `(I − B)⁻¹ D (I − B)⁻ᵀ` in the ordered basis, returned in original indexing.
pub fn vecchia_implied_cov(psi: &ModelParams, plan: &VecchiaPlan, locs: &[Location]) -> Result<SymMatrix> {
    psi.validate()?;
    let n = locs.len();
    plan.validate(n)?;
    let kernel = MaternKernel::new(psi.theta.nu);
    let (s2, phi, tau2) = (psi.theta.sigma2, psi.theta.phi, psi.tau2);
    let cov = |a: usize, b: usize| if a == b { s2 + tau2 } else { kernel.cov(locs[a].dist(&locs[b]), s2, phi) };
    let pos = plan.positions();
    // Rows of (I − B) in the ordered basis, stored sparsely, plus D.
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for (k, &i) in plan.order.iter().enumerate() {
        let q = &plan.cond_sets[k];
        if q.is_empty() {
            rows.push(Vec::new());
            d.push(cov(i, i));
            continue;
        }
        let sqq = SymMatrix::from_fn(q.len(), |a, b| cov(q[a], q[b]));
        let chol = sqq.cholesky().map_err(|_| Error::DegenerateConditional { position: k })?;
        let sqi: Vec<f64> = q.iter().map(|&j| cov(j, i)).collect();
        let b = chol.solve(&sqi);
        let var = cov(i, i) - b.iter().zip(&sqi).map(|(x, y)| x * y).sum::<f64>();
        if !(var > 0.0) {
            return Err(Error::DegenerateConditional { position: k });
        }
        rows.push(q.iter().zip(&b).map(|(&j, &bj)| (pos[j], bj)).collect());
        d.push(var);
    }
    // A = (I − B)⁻¹ D^{1/2}, column by column via unit lower-triangular forward substitution.
    let mut a = vec![0.0; n * n];
    for col in 0..n {
        a[col * n + col] = d[col].sqrt();
        for r in col + 1..n {
            let v: f64 = rows[r].iter().map(|&(c, b)| b * a[c * n + col]).sum();
            a[r * n + col] = v;
        }
    }
    let ordered = SymMatrix::from_fn(n, |r, c| {
        let m = r.min(c);
        (0..=m).map(|k| a[r * n + k] * a[c * n + k]).sum()
    });
    Ok(SymMatrix::from_fn(n, |i, j| ordered.get(pos[i], pos[j])))
}
