use super::{EnvSpec, EnvStep, Environment, Observation};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// A one-time change applied once the global step counter reaches `at`.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// From step `at` on, agent action `a` is executed as `permutation[a]`.
    ActionSwap { at: usize, permutation: Vec<usize> },
    /// From step `at` on, the goal sits at `goal`.
    GoalMove { at: usize, goal: [f64; 2] },
}

impl Schedule {
    /// Exchanges the first and last actions (left ↔ right for three-action
    /// control tasks).
    pub fn swap_ends(at: usize, n_actions: usize) -> Self {
        let mut permutation: Vec<usize> = (0..n_actions).collect();
        permutation.swap(0, n_actions - 1);
        Schedule::ActionSwap { at, permutation }
    }

    pub fn at(&self) -> usize {
        match self {
            Schedule::ActionSwap { at, .. } | Schedule::GoalMove { at, .. } => *at,
        }
    }
}

/// Counts steps across episodes and applies its [`Schedule`] from step
/// `at` onwards; identical to the wrapped environment before that.
pub struct NonStationary<E> {
    inner: E,
    schedule: Schedule,
    global_step: usize,
    goal_applied: bool,
}

impl<E: Environment> NonStationary<E> {
    pub fn new(inner: E, schedule: Schedule) -> Self {
        NonStationary {
            inner,
            schedule,
            global_step: 0,
            goal_applied: false,
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn global_step(&self) -> usize {
        self.global_step
    }

    pub fn switched(&self) -> bool {
        self.global_step >= self.schedule.at()
    }
}

impl<E: Environment> Environment for NonStationary<E> {
    fn spec(&self) -> &EnvSpec {
        self.inner.spec()
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        self.inner.reset(rng)
    }

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<EnvStep> {
        let switched = self.switched();
        let action = match &self.schedule {
            Schedule::ActionSwap { permutation, .. } if switched => {
                *permutation.get(action).ok_or(Error::Index {
                    index: action,
                    len: permutation.len(),
                })?
            }
            Schedule::GoalMove { goal, .. } if switched && !self.goal_applied => {
                self.inner.set_goal(*goal)?;
                self.goal_applied = true;
                action
            }
            _ => action,
        };
        let step = self.inner.step(action, rng)?;
        self.global_step += 1;
        Ok(step)
    }

    fn set_goal(&mut self, goal: [f64; 2]) -> Result<()> {
        self.inner.set_goal(goal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{DotReacher, Episodic, MountainCar};

    fn rollout(env: &mut dyn Environment, actions: &[usize]) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(9, 0);
        env.reset(&mut rng);
        actions
            .iter()
            .map(|&a| env.step(a, &mut rng).unwrap().next_state.vector().unwrap().to_vec())
            .collect()
    }

    #[test]
    fn identity_before_switch() {
        let actions: Vec<usize> = (0..50).map(|i| (i * 7) % 3).collect();
        let mut plain = Episodic::new(MountainCar::new());
        let mut wrapped = NonStationary::new(Episodic::new(MountainCar::new()), Schedule::swap_ends(1000, 3));
        assert_eq!(rollout(&mut plain, &actions), rollout(&mut wrapped, &actions));
    }

    #[test]
    fn swap_mirrors_swapped_sequence() {
        let actions: Vec<usize> = (0..50).map(|i| (i * 7 + 1) % 3).collect();
        let mirrored: Vec<usize> = actions.iter().map(|a| 2 - a).collect();
        let mut plain = Episodic::new(MountainCar::new());
        let mut wrapped = NonStationary::new(Episodic::new(MountainCar::new()), Schedule::swap_ends(0, 3));
        assert_eq!(rollout(&mut plain, &mirrored), rollout(&mut wrapped, &actions));
    }

    #[test]
    fn goal_moves_after_switch() {
        let mut rng = RngStream::new(0, 0);
        let mut env = NonStationary::new(
            Episodic::new(DotReacher::new()),
            Schedule::GoalMove {
                at: 3,
                goal: [1.0, 1.0],
            },
        );
        env.reset(&mut rng);
        for _ in 0..3 {
            env.step(0, &mut rng).unwrap();
            assert_eq!(env.inner().dynamics().goal(), [0.0, 0.0]);
        }
        env.step(0, &mut rng).unwrap();
        assert_eq!(env.inner().dynamics().goal(), [1.0, 1.0]);
        assert_eq!(env.global_step(), 4);
    }
}
