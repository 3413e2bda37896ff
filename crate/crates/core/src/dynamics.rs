//! Canonical discrete Dubins-car model.
//!
//! Controls are held constant over each `dt` interval. Nothing here clamps
//! velocities or wraps headings: the canonical model stays a pure kinematic
//! integrator, and callers that compare angles wrap them locally.

use serde::{Deserialize, Serialize};

/// Planar pose of the robot. `phi` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub chi: f64,
    pub y: f64,
    pub phi: f64,
}

impl State {
    pub const fn new(chi: f64, y: f64, phi: f64) -> Self {
        Self { chi, y, phi }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.chi, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.chi.is_finite() && self.y.is_finite() && self.phi.is_finite()
    }

    /// Euclidean distance between the planar positions of two states.
    pub fn planar_distance(&self, other: &State) -> f64 {
        let dx = self.chi - other.chi;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Forward and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
}

impl Control {
    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }
}

/// A horizon-length sequence of controls.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence {
    pub controls: Vec<Control>,
}

impl ActionSequence {
    pub fn new(controls: Vec<Control>) -> Self {
        Self { controls }
    }

    pub fn constant(control: Control, horizon: usize) -> Self {
        Self { controls: vec![control; horizon] }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Control> {
        self.controls.iter()
    }
}

impl std::ops::Index<usize> for ActionSequence {
    type Output = Control;

    fn index(&self, idx: usize) -> &Control {
        &self.controls[idx]
    }
}

/// `H + 1` states sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> State {
        self.states[0]
    }

    pub fn last(&self) -> State {
        *self.states.last().expect("trajectory is never empty")
    }
}

/// One step of the discretised Dubins car.
#[inline]
pub fn step(s: State, u: Control, dt: f64) -> State {
    let (sin, cos) = s.phi.sin_cos();
    State {
        chi: s.chi + dt * u.v * cos,
        y: s.y + dt * u.v * sin,
        phi: s.phi + dt * u.omega,
    }
}

/// Rolls the canonical model forward from `x0` through every control in `u`.
pub fn rollout(x0: State, u: &ActionSequence, dt: f64) -> Trajectory {
    let mut states = Vec::with_capacity(u.horizon() + 1);
    states.push(x0);
    let mut s = x0;
    for &c in u.iter() {
        s = step(s, c, dt);
        states.push(s);
    }
    Trajectory { states, dt }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: State, b: State, tol: f64) -> bool {
        (a.chi - b.chi).abs() <= tol && (a.y - b.y).abs() <= tol && (a.phi - b.phi).abs() <= tol
    }

    #[test]
    fn step_examples() {
        let s = step(State::default(), Control::new(1.0, 0.0), 0.1);
        assert_eq!(s, State::new(0.1, 0.0, 0.0));

        let s = step(State::new(0.0, 0.0, FRAC_PI_2), Control::new(0.8, 0.0), 0.1);
        assert!(close(s, State::new(0.0, 0.08, FRAC_PI_2), 1e-15));

        let s = step(State::default(), Control::new(0.0, 1.0), 0.1);
        assert_eq!(s, State::new(0.0, 0.0, 0.1));
    }

    #[test]
    fn straight_rollout_reaches_expected_point() {
        let u = ActionSequence::constant(Control::new(0.8, 0.0), 20);
        let traj = rollout(State::default(), &u, 0.1);
        assert_eq!(traj.len(), 21);
        assert!(close(traj.last(), State::new(1.6, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn zero_controls_hold_position() {
        let x0 = State::new(3.0, -2.0, 7.5);
        let traj = rollout(x0, &ActionSequence::constant(Control::default(), 20), 0.1);
        assert!(traj.states.iter().all(|s| *s == x0));
    }

    #[test]
    fn constant_turn_matches_iterated_step() {
        // Oracle: iterate the displayed update by hand.
        let (mut chi, mut y, mut phi) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let (nc, ny, np) = (chi + 0.1 * 0.5 * phi.cos(), y + 0.1 * 0.5 * phi.sin(), phi + 0.1 * 0.5);
            chi = nc;
            y = ny;
            phi = np;
        }
        let traj = rollout(State::default(), &ActionSequence::constant(Control::new(0.5, 0.5), 20), 0.1);
        assert_eq!(traj.last(), State::new(chi, y, phi));
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    fn control() -> impl Strategy<Value = Control> {
        (-1.0f64..1.0, -2.0f64..2.0).prop_map(|(v, w)| Control::new(v, w))
    }

    proptest! {
        #[test]
        fn prefix_consistency(x in -10.0f64..10.0, y in -10.0f64..10.0, phi in -6.0f64..6.0,
                              cs in prop::collection::vec(control(), 1..30)) {
            let x0 = State::new(x, y, phi);
            let u = ActionSequence::new(cs);
            let traj = rollout(x0, &u, 0.1);
            prop_assert_eq!(traj.states[1], step(x0, u[0], 0.1));
            prop_assert_eq!(traj.len(), u.horizon() + 1);
        }

        #[test]
        fn rotational_equivariance(x in -5.0f64..5.0, y in -5.0f64..5.0, phi in -3.0f64..3.0,
                                   theta in -3.2f64..3.2,
                                   cs in prop::collection::vec(control(), 1..25)) {
            let x0 = State::new(x, y, phi);
            let u = ActionSequence::new(cs);
            let base = rollout(x0, &u, 0.1);
            let rotated = rollout(State::new(x, y, phi + theta), &u, 0.1);
            let (s, c) = theta.sin_cos();
            for (a, b) in base.states.iter().zip(&rotated.states) {
                let (dx, dy) = (a.chi - x, a.y - y);
                let ex = x + c * dx - s * dy;
                let ey = y + s * dx + c * dy;
                prop_assert!((ex - b.chi).abs() < 1e-9 && (ey - b.y).abs() < 1e-9);
            }
        }

        #[test]
        fn straight_line_closed_form(x in -5.0f64..5.0, y in -5.0f64..5.0, phi in -3.0f64..3.0,
                                     vs in prop::collection::vec(0.0f64..0.8, 1..25)) {
            let x0 = State::new(x, y, phi);
            let u = ActionSequence::new(vs.iter().map(|&v| Control::new(v, 0.0)).collect());
            let end = rollout(x0, &u, 0.1).last();
            let dist: f64 = vs.iter().map(|v| 0.1 * v).sum();
            prop_assert!((end.chi - (x + dist * phi.cos())).abs() < 1e-12);
            prop_assert!((end.y - (y + dist * phi.sin())).abs() < 1e-12);
        }
    }
}
