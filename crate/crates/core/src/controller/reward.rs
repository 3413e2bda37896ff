use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, ActionSequence, State};
use crate::error::{Error, Result};

/// Exponents above this are clamped before `exp`.
pub const EXPONENT_CAP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub alpha: f64,
    /// Bias below which predicted error is not penalised.
    pub beta_bias: f64,
    pub sigma: f64,
    pub v_max: f64,
    pub horizon: usize,
    pub dt: f64,
    /// Use `-e^x - 1` instead of `-(e^x - 1)` above the bias. The printed
    /// form jumps to -2 at the bias.
    pub verbatim_penalty: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta_bias: 0.1, sigma: 10.0, v_max: 0.8, horizon: 20, dt: 0.1, verbatim_penalty: false }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0) {
            return Err(Error::config("reward.v_max", "must be > 0"));
        }
        if self.horizon == 0 {
            return Err(Error::config("reward.horizon", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("reward.dt", "must be > 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("reward.sigma", "must be > 0"));
        }
        if !self.alpha.is_finite() || !self.beta_bias.is_finite() {
            return Err(Error::config("reward", "alpha and beta_bias must be finite"));
        }
        Ok(())
    }

    /// `1 / (v_max * H * dt)`: the inverse of the furthest distance the
    /// robot can cover in one horizon.
    pub fn eta(&self) -> f64 {
        1.0 / (self.v_max * self.horizon as f64 * self.dt)
    }
}

/// Progress toward `goal` along the canonical rollout: each step's
/// displacement projected onto the unit vector from that step's start to the
/// goal. Once a rollout position lands on the goal the remaining terms are 0.
pub fn goal_reward(x0: &State, u: &ActionSequence, goal: [f64; 2], cfg: &RewardConfig) -> f64 {
    let traj = rollout(*x0, u, cfg.dt);
    let mut sum = 0.0;
    for w in traj.states.windows(2) {
        let (gx, gy) = (goal[0] - w[0].chi, goal[1] - w[0].y);
        let norm = gx.hypot(gy);
        if norm < 1e-9 {
            break;
        }
        sum += cfg.alpha * ((w[1].chi - w[0].chi) * gx + (w[1].y - w[0].y) * gy) / norm;
    }
    sum
}

pub fn normalized_goal_reward(x0: &State, u: &ActionSequence, goal: [f64; 2], cfg: &RewardConfig) -> f64 {
    (cfg.eta() * goal_reward(x0, u, goal, cfg)).clamp(0.0, 1.0)
}

/// Zero up to the bias, then an exponentially growing penalty in the
/// normalised predicted error.
pub fn traversability_reward(tau_hat: f64, cfg: &RewardConfig) -> f64 {
    let excess = cfg.eta() * tau_hat - cfg.beta_bias;
    if !(excess > 0.0) {
        return 0.0;
    }
    let e = (cfg.sigma * excess).min(EXPONENT_CAP).exp();
    if cfg.verbatim_penalty {
        -e - 1.0
    } else {
        -(e - 1.0)
    }
}

/// Sum of the normalised goal reward and the traversability reward for a
/// given predicted error.
pub fn total_reward(x0: &State, u: &ActionSequence, goal: [f64; 2], tau_hat: f64, cfg: &RewardConfig) -> f64 {
    normalized_goal_reward(x0, u, goal, cfg) + traversability_reward(tau_hat, cfg)
}
