use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mppi::{mppi_step, MppiConfig, MppiDiagnostics};
use super::predictor::Predictor;
use super::reward::RewardConfig;
use crate::dynamics::{ActionSequence, Control, State};
use crate::error::{Error, Result};
use crate::labeling::{EpisodeLog, ImageHistory};
use crate::terrain::{render_observation, EgoObservation, RenderConfig, SimConfig, SimState, TerrainMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    pub reward: RewardConfig,
    pub mppi: MppiConfig,
    pub render: RenderConfig,
    pub sim: SimConfig,
    /// Past images fed to the predictor besides the current one.
    pub history_m: usize,
    /// Steps between consecutive history images.
    pub spacing_n: usize,
    pub goal_tolerance: f64,
    pub max_steps: usize,
    /// Steps the controller keeps running and logging after a collision, so
    /// that the approach is covered by full-horizon label windows.
    pub dwell_steps: usize,
    pub record_diagnostics: bool,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            mppi: MppiConfig::default(),
            render: RenderConfig::default(),
            sim: SimConfig::default(),
            history_m: 1,
            spacing_n: 10,
            goal_tolerance: 0.5,
            max_steps: 600,
            dwell_steps: 20,
            record_diagnostics: false,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        self.mppi.validate()?;
        if self.sim.dt != self.reward.dt {
            return Err(Error::config("sim.dt", "must equal reward.dt"));
        }
        if self.spacing_n == 0 {
            return Err(Error::config("spacing_n", "must be >= 1"));
        }
        if !(self.goal_tolerance >= 0.0) {
            return Err(Error::config("goal_tolerance", "must be non-negative"));
        }
        if self.render.width == 0 || self.render.height == 0 {
            return Err(Error::config("render", "image must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavOutcome {
    ReachedGoal,
    Collision,
    Timeout,
}

/// Controller internals for one cycle, kept when `record_diagnostics` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NavStep {
    pub state: State,
    pub diagnostics: MppiDiagnostics,
}

#[derive(Debug, Clone)]
pub struct NavResult {
    pub outcome: NavOutcome,
    /// Control cycles until the outcome was decided (dwell excluded).
    pub steps: usize,
    pub final_state: State,
    pub log: EpisodeLog,
    pub trace: Vec<NavStep>,
}

fn history_at(obs: &[Arc<EgoObservation>], k: usize, m: usize, n: usize) -> Result<ImageHistory> {
    let images = (0..=m).map(|i| Arc::clone(&obs[k.saturating_sub(i * n)])).collect();
    ImageHistory::new(images, n)
}


/// Closed-loop run: render, plan, step the simulator, until the goal is
/// within tolerance, the robot collides, or `max_steps` cycles elapse. Before
/// the first `m * n` steps the history is padded with the oldest image.
#[allow(clippy::too_many_arguments)]
pub fn navigate<P: Predictor + ?Sized>(
    start: State,
    goal: [f64; 2],
    map: &TerrainMap,
    predictor: &P,
    cfg: &NavConfig,
    seed: u64,
    episode: u64,
) -> Result<NavResult> {
    cfg.validate()?;
    if !map.contains(start.chi, start.y) {
        return Err(Error::OutOfBounds { x: start.chi, y: start.y });
    }
    let dt = cfg.reward.dt;
    let mut sim = SimState::new(start, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.mppi.seed ^ seed.rotate_left(17) ^ 0x5851_f42d_4c95_7f2d);
    let mut nominal = ActionSequence::constant(Control::new(0.0, 0.0), cfg.reward.horizon);
    let mut log = EpisodeLog { episode, goal: Some(goal), ..Default::default() };
    let mut trace = Vec::new();
    let mut collided_at: Option<usize> = None;
    let mut k = 0usize;
    let outcome = loop {
        let t = k as f64 * dt;
        let state = sim.robot;
        log.state_times.push(t);
        log.states.push(sim.measured(&cfg.sim));
        log.observation_times.push(t);
        log.observations.push(Arc::new(render_observation(&state, map, &cfg.render)));

        match collided_at {
            None => {
                if (state.chi - goal[0]).hypot(state.y - goal[1]) <= cfg.goal_tolerance {
                    break NavOutcome::ReachedGoal;
                }
                if k >= cfg.max_steps {
                    break NavOutcome::Timeout;
                }
            }
            Some(c) if k - c >= cfg.dwell_steps => break NavOutcome::Collision,
            Some(_) => {}
        }

        let history = history_at(&log.observations, k, cfg.history_m, cfg.spacing_n)?;
        let step = mppi_step(&nominal, &state, &history, goal, predictor, &cfg.reward, &cfg.mppi, &mut rng)?;
        log.control_times.push(t);
        log.controls.push(step.executed);
        match sim.realized_step(step.executed, map, dt) {
            Ok(()) => {}
            Err(Error::OutOfBounds { .. }) => sim.stuck = true,
            Err(e) => return Err(e),
        }
        if cfg.record_diagnostics {
            trace.push(NavStep { state, diagnostics: step.diagnostics });
        }
        nominal = step.next_nominal;
        k += 1;
        if sim.stuck && collided_at.is_none() {
            collided_at = Some(k);
        }
    };
    Ok(NavResult { outcome, steps: collided_at.unwrap_or(k), final_state: sim.robot, log, trace })
}
