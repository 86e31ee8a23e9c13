use std::f64::consts::FRAC_1_SQRT_2;

use super::{Dynamics, EnvSpec, Observation, StateKind};
use crate::error::Result;
use crate::numerics::RngStream;

pub const STEP_SIZE: f64 = 0.03;
pub const GOAL_RADIUS: f64 = 0.1;

/// Unit moves for actions 1..=8 (counter-clockwise from east); action 0
/// stays put.
const DIRECTIONS: [[f64; 2]; 9] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [0.0, 1.0],
    [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [-1.0, 0.0],
    [-FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    [0.0, -1.0],
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
];

/// A point agent in `[−1, 1]²` that must reach within 0.1 of a goal.
#[derive(Debug, Clone)]
pub struct DotReacher {
    pos: [f64; 2],
    goal: [f64; 2],
}

impl DotReacher {
    pub fn new() -> Self {
        DotReacher {
            pos: [0.0, 0.0],
            goal: [0.0, 0.0],
        }
    }

    pub fn set_position(&mut self, pos: [f64; 2]) {
        self.pos = pos;
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }

    /// The action whose direction best points from `pos` at the goal.
    pub fn greedy_action(&self) -> usize {
        let dx = self.goal[0] - self.pos[0];
        let dy = self.goal[1] - self.pos[1];
        (1..9)
            .max_by(|&a, &b| {
                let da = DIRECTIONS[a][0] * dx + DIRECTIONS[a][1] * dy;
                let db = DIRECTIONS[b][0] * dx + DIRECTIONS[b][1] * dy;
                da.total_cmp(&db)
            })
            .expect("eight directions")
    }

    fn distance(&self) -> f64 {
        (self.pos[0] - self.goal[0]).hypot(self.pos[1] - self.goal[1])
    }
}

impl Default for DotReacher {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for DotReacher {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_actions: 9,
            state_kind: StateKind::Continuous {
                bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
            },
            gamma: 1.0,
            timeout: 1000,
            bootstrap_on_timeout: true,
        }
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        self.pos = [-1.0 + 2.0 * rng.uniform(), -1.0 + 2.0 * rng.uniform()];
        Observation::Continuous(self.pos.to_vec())
    }

    fn transition(&mut self, action: usize, _rng: &mut RngStream) -> (Observation, f64, bool) {
        let d = DIRECTIONS[action];
        self.pos = [
            (self.pos[0] + STEP_SIZE * d[0]).clamp(-1.0, 1.0),
            (self.pos[1] + STEP_SIZE * d[1]).clamp(-1.0, 1.0),
        ];
        let terminal = self.distance() <= GOAL_RADIUS;
        (Observation::Continuous(self.pos.to_vec()), -0.01, terminal)
    }

    fn set_goal(&mut self, goal: [f64; 2]) -> Result<()> {
        self.goal = goal;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_goal_terminates_on_first_step() {
        let mut rng = RngStream::new(0, 0);
        let mut d = DotReacher::new();
        d.set_position([0.0, 0.0]);
        let (_, r, done) = d.transition(0, &mut rng);
        assert!(done);
        assert_eq!(r, -0.01);
    }

    #[test]
    fn diagonal_walk_from_corner() {
        // Distance to cover is √2 − 0.1 at 0.03 per step.
        let expected = ((2f64.sqrt() - GOAL_RADIUS) / STEP_SIZE).ceil() as usize;
        let mut rng = RngStream::new(0, 0);
        let mut d = DotReacher::new();
        d.set_position([1.0, 1.0]);
        let mut steps = 0;
        loop {
            steps += 1;
            let a = d.greedy_action();
            if d.transition(a, &mut rng).2 {
                break;
            }
        }
        assert_eq!(steps, expected);
        assert_eq!(steps, 44);
    }

    #[test]
    fn walls_clip() {
        let mut rng = RngStream::new(0, 0);
        let mut d = DotReacher::new();
        d.set_position([0.99, -0.99]);
        for _ in 0..10 {
            d.transition(8, &mut rng);
            let [x, y] = d.position();
            assert!((-1.0..=1.0).contains(&x) && (-1.0..=1.0).contains(&y));
        }
        assert_eq!(d.position(), [1.0, -1.0]);
    }
}
