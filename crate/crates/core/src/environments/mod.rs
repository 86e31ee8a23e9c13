//! Episodic environments with explicit terminal/timeout semantics.
//!
//! Each task is written as a [`Dynamics`] (the raw transition function) and
//! wrapped in [`Episodic`], which owns the episode clock and the protocol
//! checks. [`NonStationary`] layers a one-time change on top.

mod acrobot;
mod chain;
mod dotreacher;
mod mountaincar;
mod nonstationary;

pub use acrobot::Acrobot;
pub use chain::{Chain, CHAIN_GAMMA, CHAIN_LENGTH, CHAIN_START, CHAIN_TIMEOUT};
pub use dotreacher::DotReacher;
pub use mountaincar::MountainCar;
pub use nonstationary::{NonStationary, Schedule};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Observation {
    pub fn index(&self) -> Result<usize> {
        match self {
            Observation::Discrete(s) => Ok(*s),
            Observation::Continuous(_) => {
                Err(Error::Unsupported("continuous state used as a table index".into()))
            }
        }
    }

    pub fn vector(&self) -> Result<&[f64]> {
        match self {
            Observation::Continuous(x) => Ok(x),
            Observation::Discrete(_) => {
                Err(Error::Unsupported("discrete state used as a feature vector".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub next_state: Observation,
    pub reward: f64,
    pub terminal: bool,
    pub timed_out: bool,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminal || self.timed_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Discrete { n: usize },
    Continuous { bounds: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub n_actions: usize,
    pub state_kind: StateKind,
    pub gamma: f64,
    pub timeout: usize,
    pub bootstrap_on_timeout: bool,
}

/// A raw transition function, without an episode clock.
pub trait Dynamics: Send {
    fn spec(&self) -> EnvSpec;
    fn reset(&mut self, rng: &mut RngStream) -> Observation;
    /// Returns `(next state, reward, reached a terminal state)`.
    fn transition(&mut self, action: usize, rng: &mut RngStream) -> (Observation, f64, bool);
    fn set_goal(&mut self, _goal: [f64; 2]) -> Result<()> {
        Err(Error::Unsupported("environment has no movable goal".into()))
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, rng: &mut RngStream) -> Observation;
    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<EnvStep>;
    fn set_goal(&mut self, goal: [f64; 2]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NeedsReset,
    Running,
}

/// Adds the episode clock to a [`Dynamics`].
#[derive(Debug, Clone)]
pub struct Episodic<D> {
    dynamics: D,
    spec: EnvSpec,
    t: usize,
    phase: Phase,
}

impl<D: Dynamics> Episodic<D> {
    pub fn new(dynamics: D) -> Self {
        let spec = dynamics.spec();
        Episodic {
            dynamics,
            spec,
            t: 0,
            phase: Phase::NeedsReset,
        }
    }

    pub fn with_timeout(mut self, timeout: usize) -> Self {
        self.spec.timeout = timeout.max(1);
        self
    }

    pub fn dynamics(&self) -> &D {
        &self.dynamics
    }

    /// Steps taken in the current episode.
    pub fn elapsed(&self) -> usize {
        self.t
    }
}

impl<D: Dynamics> Environment for Episodic<D> {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        self.t = 0;
        self.phase = Phase::Running;
        self.dynamics.reset(rng)
    }

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<EnvStep> {
        if self.phase != Phase::Running {
            return Err(Error::Protocol("step called before reset or after episode end".into()));
        }
        if action >= self.spec.n_actions {
            return Err(Error::Index {
                index: action,
                len: self.spec.n_actions,
            });
        }
        let (next_state, reward, terminal) = self.dynamics.transition(action, rng);
        self.t += 1;
        let timed_out = !terminal && self.t >= self.spec.timeout;
        if terminal || timed_out {
            self.phase = Phase::NeedsReset;
        }
        Ok(EnvStep {
            next_state,
            reward,
            terminal,
            timed_out,
        })
    }

    fn set_goal(&mut self, goal: [f64; 2]) -> Result<()> {
        self.dynamics.set_goal(goal)
    }
}

/// Environment options understood by [`make_env`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvOptions {
    pub reward_noise_std: f64,
    /// Overrides the environment's default timeout.
    pub timeout: Option<usize>,
    pub schedule: Option<Schedule>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        EnvOptions {
            reward_noise_std: 1.0,
            timeout: None,
            schedule: None,
        }
    }
}

pub const ENV_NAMES: [&str; 5] = ["chain", "hard_chain", "mountaincar", "acrobot", "dotreacher"];

pub fn make_env(name: &str, options: &EnvOptions) -> Result<Box<dyn Environment>> {
    fn finish<D: Dynamics + 'static>(d: D, o: &EnvOptions) -> Box<dyn Environment> {
        let mut env = Episodic::new(d);
        if let Some(t) = o.timeout {
            env = env.with_timeout(t);
        }
        match &o.schedule {
            Some(s) => Box::new(NonStationary::new(env, s.clone())),
            None => Box::new(env),
        }
    }
    Ok(match name {
        "chain" => finish(Chain::two_action(options.reward_noise_std)?, options),
        "hard_chain" => finish(Chain::hard(options.reward_noise_std)?, options),
        "mountaincar" => finish(MountainCar::new(), options),
        "acrobot" => finish(Acrobot::new(), options),
        "dotreacher" => finish(DotReacher::new(), options),
        other => {
            return Err(Error::Unsupported(format!(
                "unknown environment `{other}` (expected one of {})",
                ENV_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_errors() {
        let mut rng = RngStream::new(0, 0);
        let mut env = Episodic::new(Chain::two_action(0.0).unwrap());
        assert!(matches!(env.step(1, &mut rng), Err(Error::Protocol(_))));
        env.reset(&mut rng);
        assert!(matches!(env.step(2, &mut rng), Err(Error::Index { .. })));
        for _ in 0..2 {
            assert!(!env.step(1, &mut rng).unwrap().done());
        }
        let last = env.step(1, &mut rng).unwrap();
        assert!(last.terminal && !last.timed_out);
        assert!(matches!(env.step(1, &mut rng), Err(Error::Protocol(_))));
    }

    #[test]
    fn timeout_is_flagged() {
        let mut rng = RngStream::new(0, 0);
        let mut env = Episodic::new(Chain::two_action(0.0).unwrap()).with_timeout(3);
        env.reset(&mut rng);
        // right, left, right never terminates from s3
        assert!(!env.step(1, &mut rng).unwrap().done());
        assert!(!env.step(0, &mut rng).unwrap().done());
        let s = env.step(1, &mut rng).unwrap();
        assert!(s.timed_out && !s.terminal);
    }

    #[test]
    fn factory_knows_every_name() {
        for name in ENV_NAMES {
            assert!(make_env(name, &EnvOptions::default()).is_ok());
        }
        assert!(matches!(
            make_env("pong", &EnvOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
