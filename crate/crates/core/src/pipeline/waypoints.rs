use serde::{Deserialize, Serialize};

use super::config::mix;
use crate::controller::{navigate, NavConfig, NavOutcome, NavStep, Predictor};
use crate::dynamics::State;
use crate::error::Result;
use crate::labeling::EpisodeLog;
use crate::terrain::TerrainMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegOutcome {
    pub waypoint: [f64; 2],
    /// `None` when an earlier leg failed and this one was not attempted.
    pub outcome: Option<NavOutcome>,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct WaypointReport {
    pub success: bool,
    pub legs: Vec<LegOutcome>,
    /// Poses after each executed step, all legs concatenated.
    pub trajectory: Vec<State>,
    /// One log per attempted leg, labelable like any other episode.
    pub logs: Vec<EpisodeLog>,
    /// Per-leg controller diagnostics; empty unless `record_diagnostics` is set.
    pub traces: Vec<Vec<NavStep>>,
}

impl WaypointReport {
    /// Distance driven along the trajectory.
    pub fn path_length(&self, start: &State) -> f64 {
        let mut prev = *start;
        let mut sum = 0.0;
        for s in &self.trajectory {
            sum += prev.planar_distance(s);
            prev = *s;
        }
        sum
    }
}

/// Visits `waypoints` in order with a frozen predictor. Stops at the first
/// leg that does not reach its waypoint.
pub fn evaluate_waypoints<P: Predictor + ?Sized>(
    predictor: &P,
    map: &TerrainMap,
    start: State,
    waypoints: &[[f64; 2]],
    nav: &NavConfig,
    seed: u64,
) -> Result<WaypointReport> {
    let mut legs: Vec<LegOutcome> =
        waypoints.iter().map(|&w| LegOutcome { waypoint: w, outcome: None, steps: 0 }).collect();
    let mut trajectory = Vec::new();
    let mut logs = Vec::new();
    let mut traces = Vec::new();
    let mut robot = start;
    let mut success = !waypoints.is_empty();
    for (i, leg) in legs.iter_mut().enumerate() {
        let mut cfg = nav.clone();
        cfg.mppi.seed = mix(seed, i as u64);
        let r = navigate(robot, leg.waypoint, map, predictor, &cfg, mix(seed, 0x1000 + i as u64), i as u64)?;
        leg.outcome = Some(r.outcome);
        leg.steps = r.steps;
        trajectory.extend_from_slice(&r.log.states[1..]);
        robot = r.final_state;
        logs.push(r.log);
        traces.push(r.trace);
        if r.outcome != NavOutcome::ReachedGoal {
            success = false;
            break;
        }
    }
    Ok(WaypointReport { success, legs, trajectory, logs, traces })
}
