use super::{Dynamics, EnvSpec, Observation, StateKind};
use crate::analysis::TabularMdpModel;
use crate::error::{Error, Result};
use crate::numerics::{sample_gaussian, RngStream};

pub const CHAIN_LENGTH: usize = 5;
/// Index of s3.
pub const CHAIN_START: usize = 2;
pub const CHAIN_GAMMA: f64 = 0.9;
pub const CHAIN_TIMEOUT: usize = 100;

/// Five-state corridor with terminals past both ends. Only the step off the
/// right end pays an expected reward (1); Gaussian noise is added to every
/// reward.
#[derive(Debug, Clone)]
pub struct Chain {
    n_actions: usize,
    right_action: usize,
    noise_std: f64,
    pos: usize,
}

impl Chain {
    /// Actions: 0 = left, 1 = right.
    pub fn two_action(noise_std: f64) -> Result<Self> {
        Self::new(2, 1, noise_std)
    }

    /// Four actions, of which only the last (index 3) moves right.
    pub fn hard(noise_std: f64) -> Result<Self> {
        Self::new(4, 3, noise_std)
    }

    pub fn new(n_actions: usize, right_action: usize, noise_std: f64) -> Result<Self> {
        if right_action >= n_actions {
            return Err(Error::Index {
                index: right_action,
                len: n_actions,
            });
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::Domain(format!("invalid reward noise {noise_std}")));
        }
        Ok(Chain {
            n_actions,
            right_action,
            noise_std,
            pos: CHAIN_START,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn right_action(&self) -> usize {
        self.right_action
    }

    /// Expected-reward model for exact analysis.
    pub fn model(&self) -> TabularMdpModel {
        let n = CHAIN_LENGTH;
        let mut transitions = vec![vec![vec![0.0; n]; self.n_actions]; n];
        let mut rewards = vec![vec![0.0; self.n_actions]; n];
        for s in 0..n {
            for a in 0..self.n_actions {
                if a == self.right_action {
                    if s + 1 < n {
                        transitions[s][a][s + 1] = 1.0;
                    } else {
                        rewards[s][a] = 1.0;
                    }
                } else if s > 0 {
                    transitions[s][a][s - 1] = 1.0;
                }
            }
        }
        let mut start = vec![0.0; n];
        start[CHAIN_START] = 1.0;
        TabularMdpModel::new(transitions, rewards, start, CHAIN_GAMMA)
            .expect("chain model is well formed")
    }
}

impl Dynamics for Chain {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_actions: self.n_actions,
            state_kind: StateKind::Discrete { n: CHAIN_LENGTH },
            gamma: CHAIN_GAMMA,
            timeout: CHAIN_TIMEOUT,
            bootstrap_on_timeout: false,
        }
    }

    fn reset(&mut self, _rng: &mut RngStream) -> Observation {
        self.pos = CHAIN_START;
        Observation::Discrete(self.pos)
    }

    fn transition(&mut self, action: usize, rng: &mut RngStream) -> (Observation, f64, bool) {
        let noise = sample_gaussian(0.0, self.noise_std, rng).expect("validated noise scale");
        if action == self.right_action {
            if self.pos + 1 == CHAIN_LENGTH {
                return (Observation::Discrete(self.pos), 1.0 + noise, true);
            }
            self.pos += 1;
        } else {
            if self.pos == 0 {
                return (Observation::Discrete(self.pos), noise, true);
            }
            self.pos -= 1;
        }
        (Observation::Discrete(self.pos), noise, false)
    }
}
