use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_collect, home_position};
use super::config::{mix, CampaignConfig};
use crate::controller::{navigate, NavConfig, NavOutcome};
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::labeling::{Dataset, EpisodeLog};
use crate::regressor::{load_checkpoint, save_checkpoint, train, CheckpointMeta, RegressorParams, TrainConfig};
use crate::terrain::{generate_map, nearest_clear_position, sample_goal_in, TerrainMap};

/// Per-round bookkeeping. Round 0 is the bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    /// Simulated minutes of driving collected this round.
    pub minutes: f64,
    pub goals_attempted: usize,
    pub goals_reached: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub new_samples: usize,
    /// Dataset size after merging this round.
    pub dataset_size: usize,
    pub best_val_loss: f64,
}

/// Logs and counters from one round of on-policy driving.
#[derive(Debug, Clone, Default)]
pub struct Collection {
    pub logs: Vec<EpisodeLog>,
    pub minutes: f64,
    pub goals_attempted: usize,
    pub goals_reached: usize,
    pub collisions: usize,
    pub timeouts: usize,
}

/// A running collect/retrain campaign: the map, the merged dataset and the
/// current weights.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub cfg: CampaignConfig,
    pub map: TerrainMap,
    pub dataset: Dataset,
    pub params: Option<RegressorParams>,
    pub reports: Vec<RoundReport>,
    out_dir: Option<PathBuf>,
    clearance: Vec<f64>,
}

pub fn round_dir(root: &Path, round: u32) -> PathBuf {
    root.join("rounds").join(round.to_string())
}

/// Heading from `from` toward `to`; random when the two coincide.
pub(crate) fn away_from<R: Rng>(from: [f64; 2], to: [f64; 2], rng: &mut R) -> f64 {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    if dx.hypot(dy) < 1e-9 {
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
    } else {
        dy.atan2(dx)
    }
}

/// Drops episodes too short to contribute a single labeled window.
fn labelable(logs: &[EpisodeLog]) -> Vec<EpisodeLog> {
    logs.iter().filter(|l| !l.controls.is_empty()).cloned().collect()
}

impl Campaign {
    pub fn new(cfg: CampaignConfig, map: TerrainMap) -> Result<Self> {
        cfg.validate()?;
        map.validate()?;
        let clearance = map.rigid_clearance(cfg.reset_clearance + map.resolution);
        Ok(Self { cfg, map, dataset: Dataset::default(), params: None, reports: Vec::new(), out_dir: None, clearance })
    }

    /// Writes every round's logs, dataset, checkpoint and report under
    /// `dir/rounds/<k>/`.
    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    fn nav_config(&self, seed: u64) -> NavConfig {
        let mut nav = self.cfg.nav.clone();
        nav.mppi.seed = seed;
        nav
    }

    fn train_config(&self, round: u32) -> TrainConfig {
        TrainConfig { seed: mix(self.cfg.seed, 0x7a1 + round as u64), ..self.cfg.train.clone() }
    }

    fn persist(&self, round: u32, logs: &[EpisodeLog], fresh: &Dataset, meta: &CheckpointMeta) -> Result<()> {
        let Some(root) = &self.out_dir else {
            return Ok(());
        };
        let dir = round_dir(root, round);
        for log in logs {
            log.save(&dir.join("logs"), &format!("ep{:05}", log.episode))?;
        }
        fresh.save(&dir.join("dataset"))?;
        if let Some(p) = &self.params {
            save_checkpoint(p, &dir.join("checkpoint.metn"), meta)?;
        }
        let report = self.reports.last().expect("report pushed before persist");
        let path = dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(&path, e))
    }

    /// Labels `logs` as round `round`, merges them and retrains from the
    /// current weights (from scratch if there are none yet).
    pub fn absorb(&mut self, round: u32, collection: Collection) -> Result<&RoundReport> {
        let logs = labelable(&collection.logs);
        let fresh = Dataset::from_logs(&logs, &self.cfg.label, round)?;
        if fresh.is_empty() {
            return Err(Error::Campaign(format!(
                "round {round} produced no labeled samples from {} episodes ({:.2} min)",
                logs.len(),
                collection.minutes
            )));
        }
        let new_samples = fresh.len();
        let to_disk = self.out_dir.is_some().then(|| fresh.clone());
        self.dataset.merge(fresh);
        let init = match &self.params {
            Some(p) => p.clone(),
            None => RegressorParams::init(&self.cfg.arch, mix(self.cfg.seed, 0x1417))?,
        };
        let (params, tr) = train(&init, &self.dataset, &self.train_config(round))?;
        self.params = Some(params);
        self.reports.push(RoundReport {
            round,
            minutes: collection.minutes,
            goals_attempted: collection.goals_attempted,
            goals_reached: collection.goals_reached,
            collisions: collection.collisions,
            timeouts: collection.timeouts,
            new_samples,
            dataset_size: self.dataset.len(),
            best_val_loss: tr.best_val_loss,
        });
        let meta = CheckpointMeta {
            round: Some(round),
            dataset_size: self.dataset.len(),
            best_val_loss: Some(tr.best_val_loss),
            epochs_run: tr.epochs.len(),
        };
        if let Some(fresh) = to_disk {
            self.persist(round, &logs, &fresh, &meta)?;
        }
        Ok(self.reports.last().expect("just pushed"))
    }

    /// Scripted collection, labeling and training from scratch.
    pub fn bootstrap(&mut self) -> Result<&RoundReport> {
        let logs = bootstrap_collect(&self.map, &self.cfg)?;
        let minutes = logs.iter().map(|l| l.controls.len()).sum::<usize>() as f64 * self.cfg.nav.reward.dt / 60.0;
        let collisions = logs.len().saturating_sub(1);
        self.absorb(0, Collection { logs, minutes, collisions, ..Default::default() })
    }

    /// Drives the current model to random goals for `minutes_per_round`.
    pub fn collect(&self, round: u32) -> Result<Collection> {
        let params = self.params.as_ref().ok_or_else(|| Error::Campaign("collect needs a trained model".into()))?;
        let cfg = &self.cfg;
        let budget = cfg.steps_for_minutes(cfg.minutes_per_round);
        let timeout = cfg.goal_timeout_steps();
        let round_seed = mix(cfg.seed, round as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
        let home = home_position(&self.map, &self.clearance, cfg)?;
        let mut robot = State::new(home[0], home[1], rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let mut out = Collection::default();
        let mut used = 0usize;
        let mut episode = 0u64;
        while used < budget {
            let goal = match sample_goal_in(&self.map, &robot, &mut rng, cfg.goal_min_dist, cfg.goal_max_dist, cfg.region.as_ref()) {
                Ok(g) => g,
                Err(Error::NoValidGoal { .. }) => {
                    // Drifted out of reach of the goal region: carry the robot home.
                    robot = State::new(home[0], home[1], robot.phi);
                    sample_goal_in(&self.map, &robot, &mut rng, cfg.goal_min_dist, cfg.goal_max_dist, cfg.region.as_ref())?
                }
                Err(e) => return Err(e),
            };
            let mut nav = self.nav_config(mix(round_seed, episode));
            let cap = budget - used;
            nav.max_steps = timeout.min(cap);
            let r = navigate(robot, goal, &self.map, params, &nav, mix(round_seed, episode ^ 0x51), episode)?;
            used += r.log.controls.len();
            let truncated = r.outcome == NavOutcome::Timeout && cap < timeout;
            if !truncated {
                out.goals_attempted += 1;
            }
            match r.outcome {
                NavOutcome::ReachedGoal => {
                    out.goals_reached += 1;
                    robot = r.final_state;
                }
                NavOutcome::Timeout => {
                    if !truncated {
                        out.timeouts += 1;
                    }
                    robot = r.final_state;
                }
                NavOutcome::Collision => {
                    out.collisions += 1;
                    let p = nearest_clear_position(&self.map, &self.clearance, r.final_state.position(), cfg.reset_clearance, cfg.region.as_ref())
                        .ok_or_else(|| Error::Campaign("no clear cell to reset to".into()))?;
                    robot = State::new(p[0], p[1], away_from(r.final_state.position(), p, &mut rng));
                }
            }
            out.logs.push(r.log);
            episode += 1;
        }
        out.minutes = used as f64 * cfg.nav.reward.dt / 60.0;
        Ok(out)
    }

    pub fn run_round(&mut self, round: u32) -> Result<&RoundReport> {
        let c = self.collect(round)?;
        self.absorb(round, c)
    }

    /// Bootstrap followed by `cfg.rounds` collect/retrain rounds.
    pub fn run(&mut self) -> Result<()> {
        self.bootstrap()?;
        for k in 1..=self.cfg.rounds as u32 {
            self.run_round(k)?;
        }
        Ok(())
    }

    /// Rebuilds a campaign from a directory written by [`Campaign::with_out_dir`]:
    /// every round's dataset up to `round`, and that round's checkpoint.
    pub fn resume(cfg: CampaignConfig, map: TerrainMap, root: &Path, round: u32) -> Result<Self> {
        let mut c = Campaign::new(cfg, map)?.with_out_dir(root);
        for k in 0..=round {
            let dir = round_dir(root, k);
            c.dataset.merge(Dataset::load(&dir.join("dataset"))?);
            let path = dir.join("report.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            c.reports.push(serde_json::from_str(&text)?);
        }
        let (params, _) = load_checkpoint(&round_dir(root, round).join("checkpoint.metn"))?;
        c.params = Some(params);
        Ok(c)
    }
}

/// Generates the configured map and runs the whole campaign.
pub fn run_campaign(cfg: &CampaignConfig, out_dir: Option<&Path>) -> Result<Campaign> {
    cfg.validate()?;
    let map = generate_map(&cfg.map)?;
    let mut c = Campaign::new(cfg.clone(), map)?;
    if let Some(d) = out_dir {
        c = c.with_out_dir(d);
    }
    c.run()?;
    Ok(c)
}
