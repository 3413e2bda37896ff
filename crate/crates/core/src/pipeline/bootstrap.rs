use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::campaign::away_from;
use super::config::{mix, CampaignConfig};
use crate::dynamics::{wrap_angle, Control, State};
use crate::error::{Error, Result};
use crate::labeling::EpisodeLog;
use crate::terrain::{nearest_clear_position, render_observation, sample_goal_in, SimState, TerrainMap};

/// Accumulates one episode's streams at a fixed step.
struct Recorder {
    log: EpisodeLog,
    k: usize,
    dt: f64,
}

impl Recorder {
    fn new(episode: u64, dt: f64) -> Self {
        Self { log: EpisodeLog { episode, ..Default::default() }, k: 0, dt }
    }

    fn observe(&mut self, state: State, map: &TerrainMap, cfg: &CampaignConfig) {
        let t = self.k as f64 * self.dt;
        self.log.state_times.push(t);
        self.log.states.push(state);
        self.log.observation_times.push(t);
        self.log.observations.push(Arc::new(render_observation(&state, map, &cfg.nav.render)));
    }

    fn act(&mut self, u: Control) {
        self.log.control_times.push(self.k as f64 * self.dt);
        self.log.controls.push(u);
        self.k += 1;
    }
}

enum Segment {
    Wander([f64; 2]),
    Ram([f64; 2]),
}

fn pick_obstacle<R: Rng>(map: &TerrainMap, robot: &State, cfg: &CampaignConfig, rng: &mut R) -> Option<[f64; 2]> {
    let r = cfg.bootstrap.obstacle_search_radius;
    let reach = (r / map.resolution).ceil() as isize;
    let (cx, cy) = map.cell_of(robot.chi, robot.y)?;
    let mut found = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let (ix, iy) = (cx as isize + dx, cy as isize + dy);
            if ix < 0 || iy < 0 || ix >= map.width as isize || iy >= map.height as isize {
                continue;
            }
            let (ix, iy) = (ix as usize, iy as usize);
            let c = map.cell_center(ix, iy);
            if map.is_rigid_cell(ix, iy)
                && (c[0] - robot.chi).hypot(c[1] - robot.y) <= r
                && cfg.region.as_ref().is_none_or(|reg| reg.contains(c))
            {
                found.push(c);
            }
        }
    }
    (!found.is_empty()).then(|| found[rng.random_range(0..found.len())])
}

fn relocate(map: &TerrainMap, clearance: &[f64], p: [f64; 2], cfg: &CampaignConfig) -> Result<[f64; 2]> {
    nearest_clear_position(map, clearance, p, cfg.reset_clearance, cfg.region.as_ref())
        .ok_or_else(|| Error::Campaign(format!("no cell with {} m rigid clearance to reset to", cfg.reset_clearance)))
}

/// Where collection starts: the clear cell nearest the centre of the
/// collection region (or the map).
pub fn home_position(map: &TerrainMap, clearance: &[f64], cfg: &CampaignConfig) -> Result<[f64; 2]> {
    let centre = match &cfg.region {
        Some(r) => [(r.min[0] + r.max[0]) / 2.0, (r.min[1] + r.max[1]) / 2.0],
        None => {
            let e = map.extent();
            [map.origin[0] + e[0] / 2.0, map.origin[1] + e[1] / 2.0]
        }
    };
    relocate(map, clearance, centre, cfg)
}

/// Scripted data collection: segments of noisy heading-controlled driving
/// toward random targets, interleaved with segments aimed straight at a
/// nearby rigid cell. After a collision the robot keeps receiving commands
/// for `nav.dwell_steps` steps, then is relocated to the nearest clear cell
/// and a new episode starts.
pub fn bootstrap_collect(map: &TerrainMap, cfg: &CampaignConfig) -> Result<Vec<EpisodeLog>> {
    map.validate()?;
    let b = &cfg.bootstrap;
    let dt = cfg.nav.reward.dt;
    let v_max = cfg.nav.reward.v_max;
    let omega_bound = cfg.nav.mppi.omega_bound;
    let total = cfg.steps_for_minutes(b.minutes);
    let clearance = map.rigid_clearance(cfg.reset_clearance + map.resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xb007));

    let home = home_position(map, &clearance, cfg)?;
    let mut sim = SimState::new(State::new(home[0], home[1], rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)), rng.random());
    let mut logs = Vec::new();
    let mut rec = Recorder::new(0, dt);
    let mut segment = Segment::Wander(home);
    let mut remaining = 0usize;
    let mut speed = 0.0;
    let mut dwell = 0usize;

    for _ in 0..total {
        let robot = sim.robot;
        rec.observe(sim.measured(&cfg.nav.sim), map, cfg);

        if remaining == 0 && !sim.stuck {
            remaining = rng.random_range(b.segment_steps[0]..=b.segment_steps[1]);
            speed = rng.random_range(b.speed_range[0]..=b.speed_range[1]).min(v_max);
            let ram = rng.random_bool(b.obstacle_fraction);
            segment = match ram.then(|| pick_obstacle(map, &robot, cfg, &mut rng)).flatten() {
                Some(p) => Segment::Ram(p),
                None => {
                    let target = sample_goal_in(map, &robot, &mut rng, b.wander_distance[0], b.wander_distance[1], cfg.region.as_ref())
                        .unwrap_or(home);
                    Segment::Wander(target)
                }
            };
        }
        let (target, noise_scale) = match segment {
            Segment::Wander(p) => (p, 1.0),
            Segment::Ram(p) => (p, 0.25),
        };
        let err = wrap_angle((target[1] - robot.y).atan2(target[0] - robot.chi) - robot.phi);
        let xi: f64 = StandardNormal.sample(&mut rng);
        let zeta: f64 = StandardNormal.sample(&mut rng);
        speed = (speed + b.speed_noise * zeta).clamp(b.speed_range[0], b.speed_range[1].min(v_max));
        let omega = (b.heading_gain * err + noise_scale * b.omega_noise * xi).clamp(-omega_bound, omega_bound);
        let u = Control::new(speed, omega);
        rec.act(u);
        match sim.realized_step(u, map, dt) {
            Ok(()) => {}
            Err(Error::OutOfBounds { .. }) => sim.stuck = true,
            Err(e) => return Err(e),
        }
        remaining = remaining.saturating_sub(1);
        if (sim.robot.chi - target[0]).hypot(sim.robot.y - target[1]) < 0.5 {
            remaining = 0;
        }
        if sim.stuck {
            dwell += 1;
            if dwell > cfg.nav.dwell_steps {
                rec.observe(sim.measured(&cfg.nav.sim), map, cfg);
                let next = logs.len() as u64 + 1;
                logs.push(std::mem::replace(&mut rec, Recorder::new(next, dt)).log);
                let p = relocate(map, &clearance, sim.robot.position(), cfg)?;
                sim.reset(State::new(p[0], p[1], away_from(sim.robot.position(), p, &mut rng)));
                dwell = 0;
                remaining = 0;
            }
        }
    }
    if !rec.log.controls.is_empty() {
        rec.observe(sim.measured(&cfg.nav.sim), map, cfg);
        logs.push(rec.log);
    }
    Ok(logs)
}
