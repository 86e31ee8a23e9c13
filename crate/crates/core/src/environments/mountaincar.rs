use super::{Dynamics, EnvSpec, Observation, StateKind};
use crate::numerics::RngStream;

pub const POSITION_MIN: f64 = -1.2;
pub const POSITION_MAX: f64 = 0.6;
pub const GOAL_POSITION: f64 = 0.5;
pub const MAX_SPEED: f64 = 0.07;

/// Under-powered car in a valley. Actions: 0 = push left, 1 = coast,
/// 2 = push right. Reward −1 per step until the car passes the goal.
#[derive(Debug, Clone)]
pub struct MountainCar {
    pos: f64,
    vel: f64,
}

impl MountainCar {
    pub fn new() -> Self {
        MountainCar {
            pos: -0.5,
            vel: 0.0,
        }
    }

    /// Places the car at an arbitrary state (used by tests and oracles).
    pub fn set_state(&mut self, pos: f64, vel: f64) {
        self.pos = pos;
        self.vel = vel;
    }

    pub fn state(&self) -> [f64; 2] {
        [self.pos, self.vel]
    }
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for MountainCar {
    fn spec(&self) -> EnvSpec {
        EnvSpec {
            n_actions: 3,
            state_kind: StateKind::Continuous {
                bounds: vec![(POSITION_MIN, GOAL_POSITION), (-MAX_SPEED, MAX_SPEED)],
            },
            gamma: 1.0,
            timeout: 1000,
            bootstrap_on_timeout: true,
        }
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        self.pos = -0.6 + 0.2 * rng.uniform();
        self.vel = 0.0;
        Observation::Continuous(vec![self.pos, self.vel])
    }

    fn transition(&mut self, action: usize, _rng: &mut RngStream) -> (Observation, f64, bool) {
        self.vel += 0.001 * (action as f64 - 1.0) - 0.0025 * (3.0 * self.pos).cos();
        self.vel = self.vel.clamp(-MAX_SPEED, MAX_SPEED);
        self.pos += self.vel;
        self.pos = self.pos.clamp(POSITION_MIN, POSITION_MAX);
        if self.pos == POSITION_MIN && self.vel < 0.0 {
            self.vel = 0.0;
        }
        let terminal = self.pos >= GOAL_POSITION;
        (Observation::Continuous(vec![self.pos, self.vel]), -1.0, terminal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{Environment, Episodic};

    #[test]
    fn coasting_never_reaches_goal() {
        let mut rng = RngStream::new(0, 0);
        let mut car = MountainCar::new();
        car.set_state(-0.5, 0.0);
        for _ in 0..10_000 {
            let (_, r, done) = car.transition(1, &mut rng);
            assert_eq!(r, -1.0);
            assert!(!done);
            assert!(car.state()[0] < 0.0);
        }
    }

    #[test]
    fn reset_within_bounds() {
        let mut rng = RngStream::new(1, 0);
        let mut car = MountainCar::new();
        for _ in 0..1000 {
            let s = car.reset(&mut rng);
            let x = s.vector().unwrap();
            assert!((-0.6..=-0.4).contains(&x[0]));
            assert_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn energy_pumping_solves_quickly() {
        let mut rng = RngStream::new(2, 0);
        let mut env = Episodic::new(MountainCar::new());
        for _ in 0..20 {
            let mut s = env.reset(&mut rng);
            let mut steps = 0;
            loop {
                let vel = s.vector().unwrap()[1];
                let a = if vel < 0.0 { 0 } else { 2 };
                let step = env.step(a, &mut rng).unwrap();
                steps += 1;
                let v = step.next_state.vector().unwrap()[1];
                assert!(v.abs() <= MAX_SPEED);
                if step.done() {
                    assert!(step.terminal);
                    break;
                }
                s = step.next_state;
            }
            assert!(steps < 200, "took {steps} steps");
        }
    }
}
