use serde::{Deserialize, Serialize};

use crate::controller::NavConfig;
use crate::error::{Error, Result};
use crate::labeling::LabelConfig;
use crate::regressor::{ArchConfig, TrainConfig};
use crate::terrain::{MapGenConfig, Region};

/// Scripted wander used to seed the dataset before any model exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub minutes: f64,
    /// Probability that a segment drives straight at a nearby rigid cell.
    pub obstacle_fraction: f64,
    /// Inclusive range of segment lengths in steps.
    pub segment_steps: [usize; 2],
    pub speed_range: [f64; 2],
    /// Std of the per-step random walk on the commanded speed (m/s).
    pub speed_noise: f64,
    /// Std of the turn-rate noise added to the heading controller (rad/s).
    pub omega_noise: f64,
    pub heading_gain: f64,
    pub obstacle_search_radius: f64,
    /// Wander targets are drawn this far (min, max) from the robot.
    pub wander_distance: [f64; 2],
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            minutes: 7.5,
            obstacle_fraction: 0.3,
            segment_steps: [30, 100],
            speed_range: [0.0, 0.8],
            speed_noise: 0.05,
            omega_noise: 0.4,
            heading_gain: 1.5,
            obstacle_search_radius: 6.0,
            wander_distance: [3.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub seed: u64,
    pub rounds: usize,
    pub minutes_per_round: f64,
    pub bootstrap: BootstrapConfig,
    /// Goals are drawn uniformly from non-rigid cells at this distance range.
    pub goal_min_dist: f64,
    pub goal_max_dist: f64,
    pub goal_timeout_s: f64,
    /// Collection (goals, resets, bootstrap targets) stays inside this region.
    pub region: Option<Region>,
    /// Minimum distance to any rigid cell after a collision reset.
    pub reset_clearance: f64,
    /// Evaluation course, visited in order from `waypoint_start`.
    pub waypoints: Vec<[f64; 2]>,
    pub waypoint_start: Option<[f64; 3]>,
    pub map: MapGenConfig,
    pub nav: NavConfig,
    pub label: LabelConfig,
    pub arch: ArchConfig,
    pub train: TrainConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            rounds: 5,
            minutes_per_round: 3.0,
            bootstrap: BootstrapConfig::default(),
            goal_min_dist: 5.0,
            goal_max_dist: 15.0,
            goal_timeout_s: 60.0,
            region: None,
            reset_clearance: 1.0,
            waypoints: Vec::new(),
            waypoint_start: None,
            map: MapGenConfig::default(),
            nav: NavConfig::default(),
            label: LabelConfig::default(),
            arch: ArchConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be positive"))
    }
}

impl CampaignConfig {
    /// Checks every section and the cross-section agreements (horizon, time
    /// step, history layout, image size).
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds", "must be >= 1"));
        }
        positive("minutes_per_round", self.minutes_per_round)?;
        positive("bootstrap.minutes", self.bootstrap.minutes)?;
        positive("goal_timeout_s", self.goal_timeout_s)?;
        let b = &self.bootstrap;
        if !(0.0..=1.0).contains(&b.obstacle_fraction) {
            return Err(Error::config("bootstrap.obstacle_fraction", "must lie in [0, 1]"));
        }
        if b.segment_steps[0] == 0 || b.segment_steps[0] > b.segment_steps[1] {
            return Err(Error::config("bootstrap.segment_steps", "need 1 <= min <= max"));
        }
        if !(b.speed_range[0] >= 0.0 && b.speed_range[0] <= b.speed_range[1]) {
            return Err(Error::config("bootstrap.speed_range", "need 0 <= min <= max"));
        }
        if !(b.speed_noise >= 0.0 && b.omega_noise >= 0.0) {
            return Err(Error::config("bootstrap.speed_noise", "noise levels must be non-negative"));
        }
        if !(b.wander_distance[0] >= 0.0 && b.wander_distance[0] <= b.wander_distance[1]) {
            return Err(Error::config("bootstrap.wander_distance", "need 0 <= min <= max"));
        }
        if !(self.goal_min_dist >= 0.0 && self.goal_min_dist <= self.goal_max_dist) {
            return Err(Error::config("goal_min_dist", "need 0 <= goal_min_dist <= goal_max_dist"));
        }
        if !(self.reset_clearance >= 0.0) {
            return Err(Error::config("reset_clearance", "must be non-negative"));
        }
        if let Some(r) = &self.region {
            if !(r.min[0] < r.max[0] && r.min[1] < r.max[1]) {
                return Err(Error::config("region", "min must be below max"));
            }
        }
        self.map.validate().map_err(|e| prefix("map", e))?;
        self.nav.validate().map_err(|e| prefix("nav", e))?;
        self.label.validate()?;
        self.arch.validate()?;
        self.train.validate()?;

        let l = &self.label;
        let a = &self.arch;
        let n = &self.nav;
        if l.horizon != a.horizon || l.horizon != n.reward.horizon {
            return Err(Error::config("label.horizon", "must equal arch.horizon and nav.reward.horizon"));
        }
        if l.dt != n.reward.dt {
            return Err(Error::config("label.dt", "must equal nav.reward.dt"));
        }
        if l.history_m + 1 != a.history_len || l.history_m != n.history_m {
            return Err(Error::config("label.history_m", "must equal nav.history_m and arch.history_len - 1"));
        }
        if l.spacing_n != n.spacing_n {
            return Err(Error::config("label.spacing_n", "must equal nav.spacing_n"));
        }
        if (l.image_rate * n.reward.dt - 1.0).abs() > 1e-9 {
            return Err(Error::config("label.image_rate", "must be one image per control step"));
        }
        if a.obs_height != n.render.height || a.obs_width != n.render.width || a.obs_channels != 3 {
            return Err(Error::config("arch.obs_height", "observation shape must match nav.render"));
        }
        Ok(())
    }

    pub fn goal_timeout_steps(&self) -> usize {
        (self.goal_timeout_s / self.nav.reward.dt).round() as usize
    }

    pub fn steps_for_minutes(&self, minutes: f64) -> usize {
        (minutes * 60.0 / self.nav.reward.dt).round() as usize
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig { path, reason } => Error::InvalidConfig { path: format!("{section}.{path}"), reason },
        other => other,
    }
}

/// Stateless 64-bit mixer for deriving independent sub-seeds.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        CampaignConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_rounds_rejected() {
        let cfg = CampaignConfig { rounds: 0, ..Default::default() };
        match cfg.validate() {
            Err(Error::InvalidConfig { path, .. }) => assert_eq!(path, "rounds"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_errors_carry_section_prefix() {
        let mut cfg = CampaignConfig::default();
        cfg.map.densities.shrub = 2.0;
        match cfg.validate() {
            Err(Error::InvalidConfig { path, .. }) => assert_eq!(path, "map.densities.shrub"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_horizon_rejected() {
        let mut cfg = CampaignConfig::default();
        cfg.arch.horizon = 10;
        assert!(cfg.validate().is_err());
    }
}
