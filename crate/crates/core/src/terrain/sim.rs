use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TerrainMap;
use crate::dynamics::{step, Control, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// Adds Gaussian noise to the logged odometry. The true pose is unaffected.
    pub odometry_noise: bool,
    pub odometry_noise_std: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.1, odometry_noise: false, odometry_noise_std: 0.02 }
    }
}

/// Single-owner simulator state for one episode.
#[derive(Debug, Clone)]
pub struct SimState {
    pub robot: State,
    /// Collision latch. Once set the robot stays pinned until `reset`.
    pub stuck: bool,
    pub rng: ChaCha8Rng,
    pub clock: u64,
}

impl SimState {
    pub fn new(robot: State, seed: u64) -> Self {
        Self { robot, stuck: false, rng: ChaCha8Rng::seed_from_u64(seed), clock: 0 }
    }

    /// Relocates the robot and clears the collision latch.
    pub fn reset(&mut self, robot: State) {
        self.robot = robot;
        self.stuck = false;
    }

    /// Advances the simulator by one step of the realized (disturbed) dynamics.
    ///
    /// The cell under the robot scales the forward velocity by its drag and
    /// perturbs the heading by a per-step Gaussian angle. Moving into a rigid
    /// cell leaves the pose unchanged and latches `stuck`.
    pub fn realized_step(&mut self, u: Control, map: &TerrainMap, dt: f64) -> Result<()> {
        self.clock += 1;
        if self.stuck {
            return Ok(());
        }
        let here = *map
            .class_at(self.robot.chi, self.robot.y)
            .ok_or(Error::OutOfBounds { x: self.robot.chi, y: self.robot.y })?;
        let mut omega = u.omega;
        if here.heading_noise_std > 0.0 {
            let xi: f64 = StandardNormal.sample(&mut self.rng);
            omega += xi * here.heading_noise_std / dt;
        }
        let effective = Control::new(here.drag * u.v, omega);
        let next = step(self.robot, effective, dt);
        match map.class_at(next.chi, next.y) {
            None => Err(Error::OutOfBounds { x: next.chi, y: next.y }),
            Some(c) if c.rigid => {
                self.stuck = true;
                Ok(())
            }
            Some(_) => {
                self.robot = next;
                Ok(())
            }
        }
    }

    /// The pose as reported by odometry.
    pub fn measured(&mut self, cfg: &SimConfig) -> State {
        if !cfg.odometry_noise || cfg.odometry_noise_std <= 0.0 {
            return self.robot;
        }
        let nx: f64 = StandardNormal.sample(&mut self.rng);
        let ny: f64 = StandardNormal.sample(&mut self.rng);
        State::new(
            self.robot.chi + nx * cfg.odometry_noise_std,
            self.robot.y + ny * cfg.odometry_noise_std,
            self.robot.phi,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rollout, ActionSequence};
    use crate::terrain::{ClassTag, TerrainClass};
    use proptest::prelude::*;

    fn map_with(tag_at_x: impl Fn(f64) -> u8) -> TerrainMap {
        let mut map = TerrainMap::open(80, 40, 0.25);
        for iy in 0..map.height {
            for ix in 0..map.width {
                let c = map.cell_center(ix, iy);
                map.set_cell(ix, iy, tag_at_x(c[0]));
            }
        }
        map
    }

    #[test]
    fn free_cell_matches_canonical_step() {
        let map = TerrainMap::open(40, 40, 0.25);
        let start = State::new(5.0, 5.0, 0.3);
        let mut sim = SimState::new(start, 1);
        sim.realized_step(Control::new(0.8, 0.0), &map, 0.1).unwrap();
        assert_eq!(sim.robot, step(start, Control::new(0.8, 0.0), 0.1));
        assert!((sim.robot.planar_distance(&start) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn tall_grass_scales_displacement() {
        let grass = TerrainMap::open(1, 1, 1.0).classes.iter().position(|c| c.tag == ClassTag::TallGrass).unwrap();
        let map = map_with(|_| grass as u8);
        assert_eq!(map.classes[grass], TerrainClass::tall_grass(0.6));
        let start = State::new(5.0, 5.0, 0.0);
        let mut sim = SimState::new(start, 1);
        sim.realized_step(Control::new(0.8, 0.0), &map, 0.1).unwrap();
        assert!((sim.robot.planar_distance(&start) - 0.6 * 0.8 * 0.1).abs() < 1e-12);
    }

    #[test]
    fn rigid_cell_blocks_and_latches() {
        let map = map_with(|x| if x > 5.05 { 2 } else { 0 });
        let start = State::new(5.0, 5.0, 0.0);
        let mut sim = SimState::new(start, 1);
        sim.realized_step(Control::new(0.8, 0.0), &map, 0.1).unwrap();
        assert_eq!(sim.robot, start);
        assert!(sim.stuck);
        // latch is monotone, even when commanding away from the obstacle
        for _ in 0..5 {
            sim.realized_step(Control::new(0.8, 1.0), &map, 0.1).unwrap();
            assert!(sim.stuck);
            assert_eq!(sim.robot, start);
        }
        sim.reset(State::new(2.0, 2.0, 0.0));
        assert!(!sim.stuck);
    }

    #[test]
    fn leaving_the_map_is_an_error() {
        let map = TerrainMap::open(10, 10, 0.25);
        let mut sim = SimState::new(State::new(2.45, 1.0, 0.0), 1);
        assert!(matches!(
            sim.realized_step(Control::new(0.8, 0.0), &map, 0.1),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn slip_perturbs_heading_deterministically() {
        let map = map_with(|_| 4);
        let run = || {
            let mut sim = SimState::new(State::new(10.0, 5.0, 0.0), 9);
            for _ in 0..10 {
                sim.realized_step(Control::new(0.5, 0.0), &map, 0.1).unwrap();
            }
            sim.robot
        };
        let a = run();
        assert_eq!(a, run());
        assert_ne!(a.phi, 0.0);
    }

    proptest! {
        #[test]
        fn noise_free_open_map_reproduces_rollout(
            vs in prop::collection::vec((0.0f64..0.8, -1.5f64..1.5), 1..40), seed in 0u64..100
        ) {
            let map = TerrainMap::open(400, 400, 0.25);
            let x0 = State::new(50.0, 50.0, 0.4);
            let u = ActionSequence::new(vs.iter().map(|&(v, w)| Control::new(v, w)).collect());
            let mut sim = SimState::new(x0, seed);
            let mut realized = vec![x0];
            for &c in u.iter() {
                sim.realized_step(c, &map, 0.1).unwrap();
                realized.push(sim.robot);
            }
            prop_assert_eq!(realized, rollout(x0, &u, 0.1).states);
        }
    }
}
