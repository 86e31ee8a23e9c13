//! Exact tabular oracles: policy evaluation, discounted occupancy, and the
//! policy-gradient theorem assembled from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{softmax, PolicyVector};

pub use crate::bandit::bandit_objective;

/// A finite MDP with expected rewards.
///
/// Transition rows may sum to less than one; the missing mass moves to an
/// absorbing terminal state of value zero, so the augmented chain is
/// stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdpModel {
    /// `transitions[s][a][s']`.
    transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][a]`: expected reward of taking `a` in `s`.
    rewards: Vec<Vec<f64>>,
    start: Vec<f64>,
    gamma: f64,
}

impl TabularMdpModel {
    pub fn new(
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
        start: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let n = transitions.len();
        if n == 0 {
            return Err(Error::Dimension("model needs at least one state".into()));
        }
        let k = transitions[0].len();
        if k == 0 {
            return Err(Error::Dimension("model needs at least one action".into()));
        }
        if rewards.len() != n || start.len() != n {
            return Err(Error::Dimension("rewards/start do not match state count".into()));
        }
        for (s, (rows, rs)) in transitions.iter().zip(&rewards).enumerate() {
            if rows.len() != k || rs.len() != k {
                return Err(Error::Dimension(format!("state {s} has a ragged action set")));
            }
            for row in rows {
                if row.len() != n {
                    return Err(Error::Dimension(format!("state {s} has a ragged transition row")));
                }
                let mass: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || mass > 1.0 + 1e-12 {
                    return Err(Error::Domain(format!("state {s} has an invalid transition row")));
                }
            }
        }
        let start_mass: f64 = start.iter().sum();
        if start.iter().any(|p| !(*p >= 0.0)) || (start_mass - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("start distribution must sum to 1".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Domain(format!("discount {gamma} not in [0, 1]")));
        }
        Ok(TabularMdpModel {
            transitions,
            rewards,
            start,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn n_actions(&self) -> usize {
        self.transitions[0].len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.transitions[s][a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a]
    }

    fn check_policy(&self, policy: &[PolicyVector]) -> Result<()> {
        if policy.len() != self.n_states() {
            return Err(Error::Dimension(format!(
                "policy covers {} states, model has {}",
                policy.len(),
                self.n_states()
            )));
        }
        if let Some(p) = policy.iter().find(|p| p.len() != self.n_actions()) {
            return Err(Error::Dimension(format!(
                "policy row over {} actions, model has {}",
                p.len(),
                self.n_actions()
            )));
        }
        Ok(())
    }

    /// `P_π[s][s'] = Σ_a π(a|s) P[s][a][s']`.
    fn induced(&self, policy: &[PolicyVector]) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.n_states();
        let mut p = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        for (s, pi) in policy.iter().enumerate() {
            for a in 0..self.n_actions() {
                let w = pi[a];
                r[s] += w * self.rewards[s][a];
                for (s2, prob) in self.transitions[s][a].iter().enumerate() {
                    p[(s, s2)] += w * prob;
                }
            }
        }
        (p, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub v: Vec<f64>,
    /// `q[s][a]`.
    pub q: Vec<Vec<f64>>,
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.lu();
    let x = lu
        .solve(&b)
        .ok_or_else(|| Error::Divergence("policy evaluation system is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("policy evaluation produced non-finite values".into()));
    }
    Ok(x)
}

/// Solves `(I − γP_π) v = r_π` and derives `q` by one-step lookahead.
pub fn exact_values(model: &TabularMdpModel, policy: &[PolicyVector]) -> Result<ValueTables> {
    model.check_policy(policy)?;
    let n = model.n_states();
    let (p, r) = model.induced(policy);
    let v = solve(DMatrix::identity(n, n) - p * model.gamma, r)?;
    let q = (0..n)
        .map(|s| {
            (0..model.n_actions())
                .map(|a| {
                    let next: f64 = model.transitions[s][a]
                        .iter()
                        .zip(v.iter())
                        .map(|(p, v)| p * v)
                        .sum();
                    model.rewards[s][a] + model.gamma * next
                })
                .collect()
        })
        .collect();
    Ok(ValueTables {
        v: v.iter().copied().collect(),
        q,
    })
}

/// Discounted visit mass `ν_π(s) = Σ_k γ^k P(S_k = s)`.
pub fn occupancy(model: &TabularMdpModel, policy: &[PolicyVector]) -> Result<Vec<f64>> {
    model.check_policy(policy)?;
    let n = model.n_states();
    let (p, _) = model.induced(policy);
    let mu = DVector::from_column_slice(&model.start);
    let nu = solve(DMatrix::identity(n, n) - p.transpose() * model.gamma, mu)?;
    Ok(nu.iter().copied().collect())
}

/// `J = μᵀ v_π`.
pub fn objective(model: &TabularMdpModel, policy: &[PolicyVector]) -> Result<f64> {
    let values = exact_values(model, policy)?;
    Ok(model.start.iter().zip(&values.v).map(|(m, v)| m * v).sum())
}

/// Softmax policy table from a preference table `prefs[s][a]`.
pub fn softmax_table(prefs: &[Vec<f64>]) -> Result<Vec<PolicyVector>> {
    prefs.iter().map(|row| softmax(row)).collect()
}

/// `∂J/∂θ(s) = ν_π(s) · ∇_θ(s)π(·|s) q_π(s, ·) = ν_π(s) π(·|s) ⊙ (q_π(s, ·) − v_π(s))`
/// for a tabular softmax policy with preferences `prefs[s][a]`.
pub fn exact_policy_gradient(model: &TabularMdpModel, prefs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let policy = softmax_table(prefs)?;
    let values = exact_values(model, &policy)?;
    let nu = occupancy(model, &policy)?;
    Ok(policy
        .iter()
        .enumerate()
        .map(|(s, pi)| {
            let q = &values.q[s];
            let v = pi.dot(q);
            (0..pi.len()).map(|a| nu[s] * pi[a] * (q[a] - v)).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state() -> TabularMdpModel {
        // s0 --a0--> s1 (r=1), s0 --a1--> terminal (r=0), s1 --any--> terminal (r=2)
        TabularMdpModel::new(
            vec![
                vec![vec![0.0, 1.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            ],
            vec![vec![1.0, 0.0], vec![2.0, 2.0]],
            vec![1.0, 0.0],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn hand_values() {
        let m = two_state();
        let pi = vec![PolicyVector::uniform(2).unwrap(); 2];
        let vals = exact_values(&m, &pi).unwrap();
        assert_abs_diff_eq!(vals.v[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals.q[0][0], 1.0 + 0.5 * 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals.v[0], 0.5 * 2.0 + 0.5 * 0.0, epsilon = 1e-14);
        let nu = occupancy(&m, &pi).unwrap();
        assert_abs_diff_eq!(nu[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(nu[1], 0.5 * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn zero_reward_model_has_zero_values() {
        let mut m = two_state();
        m.rewards = vec![vec![0.0; 2]; 2];
        let pi = vec![PolicyVector::uniform(2).unwrap(); 2];
        assert!(exact_values(&m, &pi).unwrap().v.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gamma_zero_occupancy_is_start() {
        let mut m = two_state();
        m.gamma = 0.0;
        let pi = vec![PolicyVector::uniform(2).unwrap(); 2];
        assert_eq!(occupancy(&m, &pi).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn non_terminating_undiscounted_loop_diverges() {
        let m = TabularMdpModel::new(
            vec![vec![vec![1.0]]],
            vec![vec![-1.0]],
            vec![1.0],
            1.0,
        )
        .unwrap();
        let pi = vec![PolicyVector::uniform(1).unwrap()];
        assert!(matches!(exact_values(&m, &pi), Err(Error::Divergence(_))));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(TabularMdpModel::new(vec![vec![vec![1.5]]], vec![vec![0.0]], vec![1.0], 0.9).is_err());
        assert!(TabularMdpModel::new(vec![vec![vec![1.0]]], vec![vec![0.0]], vec![0.5], 0.9).is_err());
        assert!(TabularMdpModel::new(vec![vec![vec![1.0]]], vec![vec![0.0]], vec![1.0], 1.5).is_err());
    }
}
