use std::f64::consts::PI;

use super::{Dynamics, EnvSpec, Observation, StateKind};
use crate::numerics::RngStream;

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_1: f64 = 0.5;
const LINK_COM_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;

/// Two-link pendulum actuated at the elbow. Actions 0/1/2 apply torque
/// −1/0/+1. Reward −1 per step until the tip rises one link length above
/// the shoulder.
#[derive(Debug, Clone)]
pub struct Acrobot {
    /// `[θ1, θ2, θ̇1, θ̇2]`.
    state: [f64; 4],
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2, i1, i2, g) = (
        LINK_MASS_1,
        LINK_MASS_2,
        LINK_LENGTH_1,
        LINK_COM_1,
        LINK_COM_2,
        LINK_MOI,
        LINK_MOI,
        GRAVITY,
    );
    let [theta1, theta2, dtheta1, dtheta2] = s;
    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

fn rk4(s: [f64; 4], torque: f64, dt: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], h: f64| {
        [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]]
    };
    let k1 = derivatives(s, torque);
    let k2 = derivatives(add(s, k1, dt / 2.0), torque);
    let k3 = derivatives(add(s, k2, dt / 2.0), torque);
    let k4 = derivatives(add(s, k3, dt), torque);
    let mut out = s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

impl Acrobot {
    pub fn new() -> Self {
        Acrobot { state: [0.0; 4] }
    }

    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    fn observe(&self) -> Observation {
        let [t1, t2, d1, d2] = self.state;
        Observation::Continuous(vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), d1, d2])
    }

    fn tip_height(&self) -> f64 {
        let [t1, t2, _, _] = self.state;
        -t1.cos() - (t1 + t2).cos()
    }
}

impl Default for Acrobot {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for Acrobot {
    fn spec(&self) -> EnvSpec {
        let unit = (-1.0, 1.0);
        EnvSpec {
            n_actions: 3,
            state_kind: StateKind::Continuous {
                bounds: vec![
                    unit,
                    unit,
                    unit,
                    unit,
                    (-MAX_VEL_1, MAX_VEL_1),
                    (-MAX_VEL_2, MAX_VEL_2),
                ],
            },
            gamma: 1.0,
            timeout: 1000,
            bootstrap_on_timeout: true,
        }
    }

    fn reset(&mut self, rng: &mut RngStream) -> Observation {
        for x in self.state.iter_mut() {
            *x = -0.1 + 0.2 * rng.uniform();
        }
        self.observe()
    }

    fn transition(&mut self, action: usize, _rng: &mut RngStream) -> (Observation, f64, bool) {
        let torque = action as f64 - 1.0;
        let mut s = rk4(self.state, torque, DT);
        s[0] = wrap(s[0]);
        s[1] = wrap(s[1]);
        s[2] = s[2].clamp(-MAX_VEL_1, MAX_VEL_1);
        s[3] = s[3].clamp(-MAX_VEL_2, MAX_VEL_2);
        self.state = s;
        let terminal = self.tip_height() > 1.0;
        (self.observe(), -1.0, terminal)
    }
}
