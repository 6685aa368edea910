//! Maxmin ordering and nearest-neighbour conditioning sets.

use crate::error::{Error, Result};
use crate::model::Location;

/// Default maximum conditioning-set size.
pub const DEFAULT_M: usize = 20;

/// Vecchia ordering and conditioning structure. `cond_sets[i]` holds the
/// original indices conditioned on by the point at ordered position `i`,
/// nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VecchiaPlan {
    pub order: Vec<usize>,
    pub cond_sets: Vec<Vec<usize>>,
    pub m: usize,
}

impl VecchiaPlan {
    /// Maxmin ordering with `m` nearest previously-ordered neighbours.
    pub fn build(locs: &[Location], m: usize) -> Result<Self> {
        let order = maxmin_order(locs);
        nn_conditioning_sets(locs, &order, m)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Ordered position of every original index.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (k, &i) in self.order.iter().enumerate() {
            pos[i] = k;
        }
        pos
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("invalid Vecchia plan: {msg}")));
        if self.order.len() != n || self.cond_sets.len() != n {
            return bad(format!("plan covers {} points, data has {n}", self.order.len()));
        }
        let mut seen = vec![false; n];
        for &i in &self.order {
            if i >= n || seen[i] {
                return bad("order is not a permutation".into());
            }
            seen[i] = true;
        }
        let pos = self.positions();
        for (k, q) in self.cond_sets.iter().enumerate() {
            if q.len() > self.m {
                return bad(format!("conditioning set {k} exceeds m = {}", self.m));
            }
            if q.iter().any(|&j| j >= n || pos[j] >= k) {
                return bad(format!("conditioning set {k} references a later point"));
            }
        }
        Ok(())
    }
}

/// Maxmin permutation: start from the point nearest the centroid, then
/// repeatedly take the point farthest from everything already ordered.
/// Ties go to the lowest original index.
pub fn maxmin_order(locs: &[Location]) -> Vec<usize> {
    let n = locs.len();
    if n == 0 {
        return Vec::new();
    }
    let cx = locs.iter().map(|p| p.x).sum::<f64>() / n as f64;
    let cy = locs.iter().map(|p| p.y).sum::<f64>() / n as f64;
    let centroid = Location::new(cx, cy);
    let mut first = 0;
    for i in 1..n {
        if locs[i].dist(&centroid) < locs[first].dist(&centroid) {
            first = i;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    let mut min_d = vec![f64::INFINITY; n];
    let mut next = first;
    for _ in 0..n {
        order.push(next);
        taken[next] = true;
        let p = locs[next];
        let mut best: Option<usize> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            min_d[i] = min_d[i].min(locs[i].dist(&p));
            if best.map_or(true, |b| min_d[i] > min_d[b]) {
                best = Some(i);
            }
        }
        match best {
            Some(b) => next = b,
            None => break,
        }
    }
    order
}

/// For each ordered position, the `min(m, i)` nearest previously ordered points.
pub fn nn_conditioning_sets(locs: &[Location], order: &[usize], m: usize) -> Result<VecchiaPlan> {
    let n = locs.len();
    let mut cond_sets = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        cand.clear();
        cand.extend(order[..k].iter().map(|&j| (locs[i].dist(&locs[j]), j)));
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let keep = m.min(k);
        if keep < cand.len() && keep > 0 {
            cand.select_nth_unstable_by(keep - 1, cmp);
        }
        cand.truncate(keep);
        cand.sort_by(cmp);
        cond_sets.push(cand.iter().map(|c| c.1).collect());
    }
    let plan = VecchiaPlan { order: order.to_vec(), cond_sets, m };
    plan.validate(n)?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_example() {
        let locs = [Location::new(0.0, 0.0), Location::new(1.0, 0.0), Location::new(0.4, 0.0)];
        assert_eq!(maxmin_order(&locs), vec![2, 1, 0]);
        assert_eq!(maxmin_order(&locs[..1]), vec![0]);
    }

    #[test]
    fn collinear_single_neighbour() {
        let locs: Vec<Location> = (0..4).map(|i| Location::new(i as f64, 0.0)).collect();
        let plan = nn_conditioning_sets(&locs, &[0, 1, 2, 3], 1).unwrap();
        assert_eq!(plan.cond_sets, vec![vec![], vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn large_m_conditions_on_all_predecessors() {
        let locs: Vec<Location> = (0..6).map(|i| Location::new((i * 7 % 5) as f64, (i * 3 % 4) as f64)).collect();
        let plan = VecchiaPlan::build(&locs, 10).unwrap();
        for (k, q) in plan.cond_sets.iter().enumerate() {
            let mut got = q.clone();
            got.sort();
            let mut want = plan.order[..k].to_vec();
            want.sort();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn validation_catches_bad_plans() {
        let plan = VecchiaPlan { order: vec![0, 1], cond_sets: vec![vec![1], vec![]], m: 1 };
        assert!(plan.validate(2).is_err());
        let plan = VecchiaPlan { order: vec![0, 0], cond_sets: vec![vec![], vec![]], m: 1 };
        assert!(plan.validate(2).is_err());
    }
}
