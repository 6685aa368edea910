//! Gaussian likelihoods for the geostatistical model `Y ~ N(μ1, Σ(θ) + τ²I)`:
//! the exact likelihood, the pairwise-marginal composite likelihood and the
//! Vecchia approximation, the latter two optionally carrying inverse-intensity
//! weights.
//!
//! Each objective can be *prepared* against a dataset once; preparation
//! caches distances and block layouts so repeated evaluation during
//! optimization only recomputes covariances.

mod exact;
mod kl;
mod ordering;
mod pairwise;
mod vecchia;

pub use exact::{exact_nll, ExactLikelihood};
pub use kl::gaussian_kl;
pub use ordering::{maxmin_order, nn_conditioning_sets, VecchiaPlan, DEFAULT_M};
pub use pairwise::{pairwise_marginal_nll, PairwiseLikelihood};
pub use vecchia::{vecchia_implied_cov, vecchia_nll, VecchiaLikelihood};

use crate::error::{Error, Result};
use crate::intensity::WeightVector;
use crate::model::{Dataset, ModelParams};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    Exact,
    PairwiseMarginal { cutoff: Option<f64> },
    Vecchia { plan: VecchiaPlan },
}

/// A negative log-(composite-)likelihood to be minimized over `ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub weights: Option<WeightVector>,
}

impl Objective {
    pub fn exact() -> Self {
        Objective { kind: ObjectiveKind::Exact, weights: None }
    }

    pub fn pairwise(cutoff: Option<f64>, weights: Option<WeightVector>) -> Self {
        Objective { kind: ObjectiveKind::PairwiseMarginal { cutoff }, weights }
    }

    pub fn vecchia(plan: VecchiaPlan, weights: Option<WeightVector>) -> Self {
        Objective { kind: ObjectiveKind::Vecchia { plan }, weights }
    }

    pub fn name(&self) -> &'static str {
        match (&self.kind, self.weights.is_some()) {
            (ObjectiveKind::Exact, _) => "exact",
            (ObjectiveKind::PairwiseMarginal { .. }, false) => "pairwise-marginal",
            (ObjectiveKind::PairwiseMarginal { .. }, true) => "ISIW-PM",
            (ObjectiveKind::Vecchia { .. }, false) => "vecchia",
            (ObjectiveKind::Vecchia { .. }, true) => "ISIW-V",
        }
    }

    pub fn prepare<'a>(&'a self, data: &'a Dataset) -> Result<PreparedObjective<'a>> {
        if let Some(w) = &self.weights {
            if w.len() != data.len() {
                return Err(Error::InvalidInput(format!("{} weights for {} observations", w.len(), data.len())));
            }
            if w.weights.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput("weights must be positive and finite".into()));
            }
        }
        let weights = self.weights.as_ref().map(|w| w.weights.as_slice());
        Ok(match &self.kind {
            ObjectiveKind::Exact => {
                if self.weights.is_some() {
                    return Err(Error::InvalidInput("the exact likelihood takes no weights".into()));
                }
                PreparedObjective::Exact(ExactLikelihood::new(data))
            }
            ObjectiveKind::PairwiseMarginal { cutoff } => {
                PreparedObjective::Pairwise(PairwiseLikelihood::new(data, weights, *cutoff)?)
            }
            ObjectiveKind::Vecchia { plan } => PreparedObjective::Vecchia(VecchiaLikelihood::new(data, plan, weights)?),
        })
    }

    /// One-shot evaluation.
    pub fn nll(&self, psi: &ModelParams, data: &Dataset) -> Result<f64> {
        self.prepare(data)?.nll(psi)
    }
}

/// An objective bound to a dataset.
#[derive(Debug, Clone)]
pub enum PreparedObjective<'a> {
    Exact(ExactLikelihood<'a>),
    Pairwise(PairwiseLikelihood<'a>),
    Vecchia(VecchiaLikelihood<'a>),
}

impl PreparedObjective<'_> {
    pub fn nll(&self, psi: &ModelParams) -> Result<f64> {
        psi.validate()?;
        match self {
            PreparedObjective::Exact(l) => l.nll(psi),
            PreparedObjective::Pairwise(l) => l.nll(psi),
            PreparedObjective::Vecchia(l) => l.nll(psi),
        }
    }
}
