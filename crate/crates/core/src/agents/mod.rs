//! Training loops: gradient bandits, REINFORCE with a baseline, online
//! actor-critic, and exact expected-gradient ascent on the chain.

mod actor_critic;
mod bandit;
mod reinforce;

pub use actor_critic::{online_ac_run, AcEpisode};
pub use bandit::{gradient_bandit_run, BanditStep};
pub use reinforce::{chain_expected_pg_run, reinforce_run, EpisodeRecord, Trajectory};

use serde::Deserialize;

use crate::bandit::{EstimatorKind, GradEstimate};
use crate::environments::Observation;
use crate::error::{Error, Result};
use crate::features::{SparseFeatures, TileCoder};
use crate::numerics::RngStream;

/// Stream ids used to split a run's randomness by purpose.
pub mod streams {
    pub const ENV: u64 = 1;
    pub const ACTION: u64 = 2;
    pub const GRAD_NOISE: u64 = 3;
    pub const SETUP: u64 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineSpec {
    /// The exact value of the current policy (bandit: `πᵀr`; chain: `v_π`).
    TrueValue,
    Learned { init: f64, beta: f64 },
    Frozen { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub estimator: EstimatorKind,
    pub baseline: BaselineSpec,
    pub alpha: f64,
    /// Entropy-bonus weight; 0 disables it.
    pub tau: f64,
    pub grad_noise_std: f64,
}

impl AgentConfig {
    pub fn new(estimator: EstimatorKind, baseline: BaselineSpec, alpha: f64) -> Self {
        AgentConfig {
            estimator,
            baseline,
            alpha,
            tau: 0.0,
            grad_noise_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("policy stepsize {} must be positive", self.alpha)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Domain(format!("entropy weight {} must be ≥ 0", self.tau)));
        }
        if !(self.grad_noise_std >= 0.0) {
            return Err(Error::Domain(format!(
                "gradient noise {} must be ≥ 0",
                self.grad_noise_std
            )));
        }
        if let BaselineSpec::Learned { beta, .. } = self.baseline {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::Domain(format!("critic stepsize {beta} must be positive")));
            }
        }
        Ok(())
    }
}

/// Adds i.i.d. `N(0, std²)` noise to every component.
pub fn inject_gradient_noise(mut g: GradEstimate, std: f64, rng: &mut RngStream) -> Result<GradEstimate> {
    add_noise(&mut g.g, std, rng)?;
    Ok(g)
}

pub(crate) fn add_noise(values: &mut [f64], std: f64, rng: &mut RngStream) -> Result<()> {
    if !(std >= 0.0) {
        return Err(Error::Domain(format!("negative noise scale {std}")));
    }
    if std > 0.0 {
        for v in values.iter_mut() {
            *v += std * rng.standard_normal();
        }
    }
    Ok(())
}

/// Maps observations to feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Featurizer {
    OneHot(usize),
    Tiles(TileCoder),
}

impl Featurizer {
    pub fn dim(&self) -> usize {
        match self {
            Featurizer::OneHot(n) => *n,
            Featurizer::Tiles(c) => c.len(),
        }
    }

    pub fn features(&self, obs: &Observation) -> Result<SparseFeatures> {
        match self {
            Featurizer::OneHot(n) => SparseFeatures::one_hot(*n, obs.index()?),
            Featurizer::Tiles(c) => c.encode(obs.vector()?),
        }
    }

    /// Index of the always-on bias feature, if any.
    pub fn bias_index(&self) -> Option<usize> {
        match self {
            Featurizer::OneHot(_) => None,
            Featurizer::Tiles(c) => Some(c.len() - 1),
        }
    }
}

/// Linear state-value estimate `v̂(s) = ωᵀx(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticState {
    pub weights: Vec<f64>,
    pub beta: f64,
    pub frozen: bool,
}

impl CriticState {
    /// Weights chosen so every state starts at `init_value`, assuming the
    /// features of each state sum to one (one-hot or normalized tiles).
    pub fn new(dim: usize, init_value: f64, beta: f64) -> Self {
        CriticState {
            weights: vec![init_value; dim],
            beta,
            frozen: false,
        }
    }

    pub fn frozen(dim: usize, value: f64) -> Self {
        CriticState {
            weights: vec![value; dim],
            beta: 0.0,
            frozen: true,
        }
    }

    pub fn from_spec(dim: usize, spec: BaselineSpec) -> Self {
        match spec {
            BaselineSpec::Learned { init, beta } => Self::new(dim, init, beta),
            BaselineSpec::Frozen { value } => Self::frozen(dim, value),
            BaselineSpec::TrueValue => Self::frozen(dim, 0.0),
        }
    }

    pub fn value(&self, x: &SparseFeatures) -> f64 {
        x.dot(&self.weights)
    }

    /// `ω ← ω + β · err · x`.
    pub fn update(&mut self, x: &SparseFeatures, err: f64) {
        if self.frozen {
            return;
        }
        for &(i, v) in &x.entries {
            self.weights[i] += self.beta * err * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let g = GradEstimate {
            g: vec![1.0, -2.0, 0.5],
            kind: EstimatorKind::Alternate,
        };
        let out = inject_gradient_noise(g.clone(), 0.0, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(out, g);
        assert!(inject_gradient_noise(g, -1.0, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn noise_moments_and_independence() {
        let n = 100_000;
        let mut rng = RngStream::new(12, 3);
        let (mut s0, mut s1, mut ss0, mut s01) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let g = GradEstimate {
                g: vec![0.0, 0.0],
                kind: EstimatorKind::Regular,
            };
            let out = inject_gradient_noise(g, 1.0, &mut rng).unwrap().g;
            s0 += out[0];
            s1 += out[1];
            ss0 += out[0] * out[0];
            s01 += out[0] * out[1];
        }
        let nf = n as f64;
        assert!((s0 / nf).abs() < 4.0 / nf.sqrt());
        assert!((s1 / nf).abs() < 4.0 / nf.sqrt());
        assert!((ss0 / nf - 1.0).abs() < 0.05);
        assert!((s01 / nf).abs() < 4.0 / nf.sqrt());
    }

    #[test]
    fn critic_init_and_freeze() {
        let x = SparseFeatures {
            dim: 4,
            entries: vec![(1, 0.5), (3, 0.5)],
        };
        let mut c = CriticState::new(4, 4.0, 0.5);
        assert_eq!(c.value(&x), 4.0);
        c.update(&x, -2.0);
        assert_eq!(c.value(&x), 4.0 - 0.5 * 2.0 * 0.5);
        let mut f = CriticState::frozen(4, -4.0);
        f.update(&x, 10.0);
        assert_eq!(f.value(&x), -4.0);
    }
}
