use super::{add_noise, streams, AgentConfig, BaselineSpec, CriticState, Featurizer};
use crate::analysis::{exact_policy_gradient, exact_values, objective, TabularMdpModel};
use crate::bandit::EstimatorKind;
use crate::environments::{Chain, Environment, Observation};
use crate::error::{Error, Result};
use crate::features::SparseFeatures;
use crate::numerics::{sample_categorical, softmax, PolicyVector, RngStream};
use crate::policies::{Policy, TabularSoftmaxPolicy, Weights};

/// One episode: `S_t`, `A_t`, `R_{t+1}` for `t = 0..T−1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub states: Vec<Observation>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub terminal: bool,
    pub timed_out: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// `G_t = Σ_{k ≥ t} γ^{k−t} R_{k+1}`, truncated at the episode end.
    pub fn returns(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rewards.len()];
        let mut g = 0.0;
        for t in (0..self.rewards.len()).rev() {
            g = self.rewards[t] + gamma * g;
            out[t] = g;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// Discounted return from the start state (exact `J` for expected-gradient
    /// agents).
    pub ret: f64,
    /// Exact `J` of the policy after this episode's update, when an exact
    /// model is available.
    pub objective: Option<f64>,
    /// Baseline value at the start state before the update.
    pub start_value: f64,
    pub length: usize,
}

pub(crate) fn policy_table(
    policy: &dyn Policy,
    featurizer: &Featurizer,
    n_states: usize,
) -> Result<Vec<PolicyVector>> {
    (0..n_states)
        .map(|s| policy.action_distribution(&featurizer.features(&Observation::Discrete(s))?))
        .collect()
}

fn rollout(
    env: &mut dyn Environment,
    policy: &dyn Policy,
    featurizer: &Featurizer,
    env_rng: &mut RngStream,
    act_rng: &mut RngStream,
) -> Result<(Trajectory, Vec<SparseFeatures>)> {
    let mut traj = Trajectory::default();
    let mut feats = Vec::new();
    let mut obs = env.reset(env_rng);
    loop {
        let x = featurizer.features(&obs)?;
        let a = sample_categorical(&policy.action_distribution(&x)?, act_rng);
        let step = env.step(a, env_rng)?;
        traj.states.push(obs);
        traj.actions.push(a);
        traj.rewards.push(step.reward);
        feats.push(x);
        if step.done() {
            traj.terminal = step.terminal;
            traj.timed_out = step.timed_out;
            return Ok((traj, feats));
        }
        obs = step.next_state;
    }
}

/// REINFORCE with a baseline: one policy update per episode, followed by
/// Monte-Carlo critic updates along the trajectory.
///
/// `model` is required for the true-value baseline and enables exact `J`
/// logging; it must describe `env` with states indexed like the
/// featurizer's one-hot encoding.
#[allow(clippy::too_many_arguments)]
pub fn reinforce_run(
    env: &mut dyn Environment,
    policy: &mut dyn Policy,
    featurizer: &Featurizer,
    critic: &mut CriticState,
    config: &AgentConfig,
    episodes: usize,
    seed: u64,
    model: Option<&TabularMdpModel>,
) -> Result<Vec<EpisodeRecord>> {
    config.validate()?;
    if config.estimator == EstimatorKind::Expected {
        return Err(Error::Unsupported(
            "REINFORCE samples its gradient; use chain_expected_pg_run for the expected update".into(),
        ));
    }
    if config.baseline == BaselineSpec::TrueValue && model.is_none() {
        return Err(Error::Unsupported("true-value baseline needs an exact model".into()));
    }
    let mut env_rng = RngStream::new(seed, streams::ENV);
    let mut act_rng = RngStream::new(seed, streams::ACTION);
    let mut noise_rng = RngStream::new(seed, streams::GRAD_NOISE);
    let gamma = env.spec().gamma;
    let (d, k) = (policy.weights().n_features(), policy.n_actions());
    let mut log = Vec::with_capacity(episodes);

    for _ in 0..episodes {
        let true_v = match (config.baseline, model) {
            (BaselineSpec::TrueValue, Some(m)) => {
                Some(exact_values(m, &policy_table(policy, featurizer, m.n_states())?)?.v)
            }
            _ => None,
        };
        let baseline = |x: &SparseFeatures, obs: &Observation, critic: &CriticState| -> Result<f64> {
            match &true_v {
                Some(v) => Ok(v[obs.index()?]),
                None => Ok(critic.value(x)),
            }
        };

        let (traj, feats) = rollout(env, policy, featurizer, &mut env_rng, &mut act_rng)?;
        let returns = traj.returns(gamma);
        let start_value = baseline(&feats[0], &traj.states[0], critic)?;

        let mut acc = Weights::zeros(d, k);
        let mut discount = 1.0;
        for t in 0..traj.len() {
            let adv = returns[t] - baseline(&feats[t], &traj.states[t], critic)?;
            let term = match config.estimator {
                EstimatorKind::Regular => policy.logpi_grad(&feats[t], traj.actions[t])?,
                _ => policy.pref_grad(&feats[t], traj.actions[t])?,
            };
            term.add_scaled_to(&mut acc, discount * adv);
            discount *= gamma;
        }
        add_noise(acc.as_mut_slice(), config.grad_noise_std, &mut noise_rng)?;
        for (w, g) in policy.weights_mut().as_mut_slice().iter_mut().zip(acc.as_slice()) {
            *w += config.alpha * g;
        }
        if policy.weights().as_slice().iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence("policy weights became non-finite".into()));
        }
        if true_v.is_none() {
            for t in 0..traj.len() {
                let err = returns[t] - critic.value(&feats[t]);
                critic.update(&feats[t], err);
            }
        }
        let objective = match model {
            Some(m) => Some(objective(m, &policy_table(policy, featurizer, m.n_states())?)?),
            None => None,
        };
        log.push(EpisodeRecord {
            ret: returns[0],
            objective,
            start_value,
            length: traj.len(),
        });
    }
    Ok(log)
}

/// Gradient ascent on the chain with the exact policy gradient, one update
/// per "episode". Every record carries the exact `J` after the update.
pub fn chain_expected_pg_run(
    chain: &Chain,
    config: &AgentConfig,
    init: &[f64],
    episodes: usize,
) -> Result<Vec<EpisodeRecord>> {
    config.validate()?;
    if init.len() != chain.n_actions() {
        return Err(Error::Dimension(format!(
            "{} initial preferences for {} actions",
            init.len(),
            chain.n_actions()
        )));
    }
    let model = chain.model();
    let mut policy = TabularSoftmaxPolicy::with_preferences(model.n_states(), init);
    let mut log = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let table = policy.table();
        let start_value = objective(&model, &softmax_rows(&table)?)?;
        let grad = exact_policy_gradient(&model, &table)?;
        for (s, row) in grad.iter().enumerate() {
            for (a, g) in row.iter().enumerate() {
                let w = policy.weights().get(s, a);
                policy.weights_mut().set(s, a, w + config.alpha * g);
            }
        }
        let j = objective(&model, &policy.distributions()?)?;
        log.push(EpisodeRecord {
            ret: j,
            objective: Some(j),
            start_value,
            length: 0,
        });
    }
    Ok(log)
}

fn softmax_rows(table: &[Vec<f64>]) -> Result<Vec<PolicyVector>> {
    table.iter().map(|row| softmax(row)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{Episodic, CHAIN_LENGTH};

    fn chain_setup(noise: f64) -> (Episodic<Chain>, Featurizer) {
        (
            Episodic::new(Chain::two_action(noise).unwrap()),
            Featurizer::OneHot(CHAIN_LENGTH),
        )
    }

    #[test]
    fn returns_backward() {
        let t = Trajectory {
            rewards: vec![1.0, 0.0, 2.0],
            ..Default::default()
        };
        let g = t.returns(0.5);
        assert_eq!(g, vec![1.0 + 0.25 * 2.0, 0.5 * 2.0, 2.0]);
    }

    #[test]
    fn runs_are_deterministic() {
        let (mut env, feat) = chain_setup(1.0);
        let cfg = AgentConfig::new(
            EstimatorKind::Alternate,
            BaselineSpec::Learned { init: 0.0, beta: 0.25 },
            0.25,
        );
        let run = |env: &mut Episodic<Chain>| {
            let mut policy = TabularSoftmaxPolicy::new(CHAIN_LENGTH, 2);
            let mut critic = CriticState::from_spec(CHAIN_LENGTH, cfg.baseline);
            reinforce_run(env, &mut policy, &feat, &mut critic, &cfg, 30, 11, None).unwrap()
        };
        assert_eq!(run(&mut env), run(&mut env));
    }

    #[test]
    fn true_value_needs_model() {
        let (mut env, feat) = chain_setup(1.0);
        let cfg = AgentConfig::new(EstimatorKind::Regular, BaselineSpec::TrueValue, 0.25);
        let mut policy = TabularSoftmaxPolicy::new(CHAIN_LENGTH, 2);
        let mut critic = CriticState::from_spec(CHAIN_LENGTH, cfg.baseline);
        assert!(matches!(
            reinforce_run(&mut env, &mut policy, &feat, &mut critic, &cfg, 1, 0, None),
            Err(Error::Unsupported(_))
        ));
        let model = Chain::two_action(1.0).unwrap().model();
        let log = reinforce_run(&mut env, &mut policy, &feat, &mut critic, &cfg, 3, 0, Some(&model))
            .unwrap();
        assert!(log.iter().all(|r| r.objective.is_some()));
    }

    #[test]
    fn expected_pg_climbs_slowly_from_uniform() {
        let chain = Chain::two_action(1.0).unwrap();
        let cfg = AgentConfig::new(EstimatorKind::Expected, BaselineSpec::TrueValue, 2f64.powi(-6));
        let log = chain_expected_pg_run(&chain, &cfg, &[0.0, 0.0], 200).unwrap();
        assert!(log.windows(2).all(|w| w[1].ret >= w[0].ret));
    }

    #[test]
    fn expected_pg_stalls_when_saturated_left() {
        let chain = Chain::two_action(1.0).unwrap();
        let cfg = AgentConfig::new(EstimatorKind::Expected, BaselineSpec::TrueValue, 2f64.powi(-6));
        let log = chain_expected_pg_run(&chain, &cfg, &[3.0, 0.0], 100).unwrap();
        let gain = log.last().unwrap().ret - log[0].start_value;
        assert!((0.0..0.01).contains(&gain), "gain {gain}");
    }
}
