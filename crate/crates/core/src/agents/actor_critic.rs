use super::{add_noise, streams, AgentConfig, CriticState, Featurizer};
use crate::bandit::EstimatorKind;
use crate::environments::Environment;
use crate::error::{Error, Result};
use crate::numerics::{entropy, sample_categorical, RngStream};
use crate::policies::Policy;

#[derive(Debug, Clone, PartialEq)]
pub struct AcEpisode {
    /// Undiscounted sum of rewards.
    pub ret: f64,
    pub length: usize,
    /// Policy entropy averaged over the states visited in the episode.
    pub mean_entropy: f64,
    /// Global step count when the episode ended.
    pub end_step: usize,
    pub terminal: bool,
    /// Critic value of the first state when the episode started.
    pub start_value: f64,
}

/// Online one-step actor-critic for `total_steps` environment steps.
///
/// `δ = R + γ v̂(S′) − v̂(S)`, with `v̂(S′) = 0` at a true terminal state and,
/// on timeout, `v̂(S′)` only if the environment bootstraps on timeout. The
/// actor moves along `α I δ · term + α τ I ∇H`, where `term` is the
/// estimator's direction and `I = γ^t` within the episode. An episode still
/// running when the step budget ends is not reported.
pub fn online_ac_run(
    env: &mut dyn Environment,
    policy: &mut dyn Policy,
    featurizer: &Featurizer,
    critic: &mut CriticState,
    config: &AgentConfig,
    total_steps: usize,
    seed: u64,
) -> Result<Vec<AcEpisode>> {
    config.validate()?;
    if config.estimator == EstimatorKind::Expected {
        return Err(Error::Unsupported(
            "the expected gradient needs an exact model; online actor-critic samples".into(),
        ));
    }
    let mut env_rng = RngStream::new(seed, streams::ENV);
    let mut act_rng = RngStream::new(seed, streams::ACTION);
    let mut noise_rng = RngStream::new(seed, streams::GRAD_NOISE);
    let spec = env.spec().clone();
    let mut episodes = Vec::new();
    let mut t_global = 0;

    'episodes: while t_global < total_steps {
        let mut x = featurizer.features(&env.reset(&mut env_rng))?;
        let start_value = critic.value(&x);
        let (mut ret, mut ent_sum, mut len, mut discount) = (0.0, 0.0, 0usize, 1.0);
        loop {
            if t_global >= total_steps {
                break 'episodes;
            }
            let pi = policy.action_distribution(&x)?;
            ent_sum += entropy(&pi);
            let a = sample_categorical(&pi, &mut act_rng);
            let step = env.step(a, &mut env_rng)?;
            t_global += 1;
            len += 1;
            ret += step.reward;

            let bootstrap = !step.terminal && (!step.timed_out || spec.bootstrap_on_timeout);
            let x_next = if step.done() && !bootstrap {
                None
            } else {
                Some(featurizer.features(&step.next_state)?)
            };
            let v_next = match (&x_next, bootstrap) {
                (Some(xn), true) => critic.value(xn),
                _ => 0.0,
            };
            let delta = step.reward + spec.gamma * v_next - critic.value(&x);

            let term = match config.estimator {
                EstimatorKind::Regular => policy.logpi_grad(&x, a)?,
                _ => policy.pref_grad(&x, a)?,
            };
            term.add_scaled_to(policy.weights_mut(), config.alpha * discount * delta);
            if config.tau > 0.0 {
                let h = policy.entropy_grad(&x)?;
                h.add_scaled_to(policy.weights_mut(), config.alpha * config.tau * discount);
            }
            if config.grad_noise_std > 0.0 {
                let mut noise = vec![0.0; policy.weights().as_slice().len()];
                add_noise(&mut noise, config.grad_noise_std, &mut noise_rng)?;
                for (w, n) in policy.weights_mut().as_mut_slice().iter_mut().zip(noise) {
                    *w += config.alpha * n;
                }
            }
            critic.update(&x, delta);
            discount *= spec.gamma;

            if !delta.is_finite() {
                return Err(Error::Divergence("TD error became non-finite".into()));
            }
            if step.done() {
                episodes.push(AcEpisode {
                    ret,
                    length: len,
                    mean_entropy: ent_sum / len as f64,
                    end_step: t_global,
                    terminal: step.terminal,
                    start_value,
                });
                continue 'episodes;
            }
            x = x_next.expect("non-final steps carry next features");
        }
    }
    Ok(episodes)
}
