use std::path::{Path, PathBuf};
use std::time::Instant;

use errnav::controller::NavStep;
use errnav::dynamics::State;
use errnav::labeling::{Dataset, EpisodeLog};
use errnav::pipeline::{bootstrap_collect, evaluate_waypoints, home_position, Campaign, CampaignConfig};
use errnav::plot::{ego_overlay_svg, overhead_svg, OverheadPlot};
use errnav::regressor::{load_checkpoint, save_checkpoint, train as fit, CheckpointMeta, RegressorParams};
use errnav::terrain::{generate_map, EgoObservation, RenderConfig, TerrainMap};
use serde::{Deserialize, Serialize};

use crate::config;
use crate::manifest::{content_hash, expand, RunManifest};
use crate::{CliError, Common};

/// One saved controller cycle, self-contained for plotting.
#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub step: NavStep,
    pub observation: EgoObservation,
    pub render: RenderConfig,
    pub dt: f64,
}

struct Run {
    name: &'static str,
    cfg: CampaignConfig,
    started: Instant,
    inputs: Vec<PathBuf>,
    artifacts: Vec<PathBuf>,
}

fn io_err(p: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", p.display()))
}

fn write(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string()))
}

impl Run {
    fn start(name: &'static str, common: &Common) -> Result<Self, CliError> {
        let cfg = config::load(common.config.as_deref(), &common.overrides)?;
        let mut inputs = Vec::new();
        if let Some(p) = &common.config {
            inputs.push(p.clone());
        }
        std::fs::create_dir_all(&common.out_dir).map_err(|e| io_err(&common.out_dir, e))?;
        Ok(Self { name, cfg, started: Instant::now(), inputs, artifacts: Vec::new() })
    }

    fn map(&mut self, common: &Common) -> Result<TerrainMap, CliError> {
        match &common.map {
            Some(p) => {
                self.inputs.push(p.clone());
                Ok(TerrainMap::load(p)?)
            }
            None => Ok(generate_map(&self.cfg.map)?),
        }
    }

    fn checkpoint(&mut self, path: &Path) -> Result<(RegressorParams, CheckpointMeta), CliError> {
        self.inputs.push(path.to_path_buf());
        self.inputs.push(path.with_extension("json"));
        Ok(load_checkpoint(path)?)
    }

    fn finish(self, common: &Common) -> Result<(), CliError> {
        let config = serde_json::to_value(&self.cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
        let manifest = RunManifest {
            subcommand: self.name.to_string(),
            content_hash: content_hash(self.name, &config, &self.inputs)?,
            config,
            seed: self.cfg.seed,
            artifacts: expand(&common.out_dir, &self.artifacts)?,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        manifest.write(&common.out_dir)?;
        println!("{} artifacts written to {}", manifest.artifacts.len(), common.out_dir.display());
        Ok(())
    }
}

fn save_logs(logs: &[EpisodeLog], dir: &Path, prefix: &str) -> Result<(), CliError> {
    for log in logs {
        log.save(dir, &format!("{prefix}{:05}", log.episode))?;
    }
    Ok(())
}

pub struct MapFlags {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub resolution: Option<f64>,
    pub grass: Option<f64>,
    pub shrub: Option<f64>,
    pub tree: Option<f64>,
    pub slip: Option<f64>,
}

pub fn mapgen(common: &Common, flags: MapFlags) -> Result<(), CliError> {
    let mut run = Run::start("mapgen", common)?;
    let m = &mut run.cfg.map;
    if let Some(s) = common.seed {
        m.seed = s;
    }
    m.width = flags.width.unwrap_or(m.width);
    m.height = flags.height.unwrap_or(m.height);
    m.resolution = flags.resolution.unwrap_or(m.resolution);
    let d = &mut m.densities;
    d.tall_grass = flags.grass.unwrap_or(d.tall_grass);
    d.shrub = flags.shrub.unwrap_or(d.shrub);
    d.tree = flags.tree.unwrap_or(d.tree);
    d.slip = flags.slip.unwrap_or(d.slip);
    let map = generate_map(&run.cfg.map).map_err(|e| match e {
        errnav::Error::InvalidConfig { path, reason } => CliError::Config(format!("invalid configuration: map.{path}: {reason}")),
        other => other.into(),
    })?;
    let path = common.out_dir.join("map.json");
    map.save(&path)?;
    run.artifacts.push(path);
    run.finish(common)
}

fn seeded(run: &mut Run, common: &Common) -> Result<(), CliError> {
    if let Some(s) = common.seed {
        run.cfg.seed = s;
        run.cfg.train.seed = s;
    }
    config::validate(&run.cfg)
}

pub fn collect(common: &Common, minutes: Option<f64>) -> Result<(), CliError> {
    let mut run = Run::start("collect", common)?;
    if let Some(m) = minutes {
        run.cfg.bootstrap.minutes = m;
    }
    seeded(&mut run, common)?;
    let map = run.map(common)?;
    let logs = bootstrap_collect(&map, &run.cfg)?;
    let logs: Vec<EpisodeLog> = logs.into_iter().filter(|l| !l.controls.is_empty()).collect();
    let dir = common.out_dir.join("logs");
    save_logs(&logs, &dir, "ep")?;
    let dataset = Dataset::from_logs(&logs, &run.cfg.label, 0)?;
    let ddir = common.out_dir.join("dataset");
    dataset.save(&ddir)?;
    println!("{} episodes, {} labeled samples", logs.len(), dataset.len());
    run.artifacts.extend([dir, ddir]);
    run.finish(common)
}

pub fn train(common: &Common, dataset_dir: &Path) -> Result<(), CliError> {
    let mut run = Run::start("train", common)?;
    seeded(&mut run, common)?;
    let dataset = Dataset::load(dataset_dir)?;
    run.inputs.push(dataset_dir.join("manifest.jsonl"));
    let init = match &common.checkpoint {
        Some(p) => run.checkpoint(p)?.0,
        None => RegressorParams::init(&run.cfg.arch, run.cfg.seed)?,
    };
    let (params, report) = fit(&init, &dataset, &run.cfg.train)?;
    let ckpt = common.out_dir.join("checkpoint.metn");
    let meta = CheckpointMeta {
        round: None,
        dataset_size: dataset.len(),
        best_val_loss: Some(report.best_val_loss),
        epochs_run: report.epochs.len(),
    };
    save_checkpoint(&params, &ckpt, &meta)?;
    let mut csv = String::from("epoch,train_loss,val_loss\n");
    for e in &report.epochs {
        csv.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
    }
    let csv_path = write(&common.out_dir.join("loss.csv"), &csv)?;
    let report_path = write(&common.out_dir.join("train_report.json"), &json(&report)?)?;
    println!(
        "best validation loss {:.6} at epoch {} of {}",
        report.best_val_loss,
        report.best_epoch,
        report.epochs.len()
    );
    run.artifacts.extend([ckpt.clone(), ckpt.with_extension("json"), csv_path, report_path]);
    run.finish(common)
}

pub fn campaign(common: &Common, extend_from: Option<u32>) -> Result<(), CliError> {
    let mut run = Run::start("campaign", common)?;
    seeded(&mut run, common)?;
    let map = run.map(common)?;
    let map_path = common.out_dir.join("map.json");
    if extend_from.is_none() {
        map.save(&map_path)?;
    }
    let mut c = match extend_from {
        Some(k) => {
            let c = Campaign::resume(run.cfg.clone(), map, &common.out_dir, k)?;
            c
        }
        None => Campaign::new(run.cfg.clone(), map)?.with_out_dir(&common.out_dir),
    };
    match extend_from {
        Some(k) => {
            c.run_round(k + 1)?;
        }
        None => c.run()?,
    }
    for r in &c.reports {
        println!(
            "round {}: {:.1} min, goals {}/{}, collisions {}, dataset {}, val {:.5}",
            r.round, r.minutes, r.goals_reached, r.goals_attempted, r.collisions, r.dataset_size, r.best_val_loss
        );
    }
    let summary = write(&common.out_dir.join("campaign.json"), &json(&c.reports)?)?;
    run.artifacts.push(summary);
    if extend_from.is_none() {
        run.artifacts.push(map_path);
    }
    let rounds: Vec<u32> = match extend_from {
        Some(k) => vec![k + 1],
        None => (0..=run.cfg.rounds as u32).collect(),
    };
    for k in rounds {
        run.artifacts.push(errnav::pipeline::round_dir(&common.out_dir, k));
    }
    run.finish(common)
}

#[derive(Serialize)]
struct EvalSummary<'a> {
    success: bool,
    path_length: f64,
    legs: &'a [errnav::pipeline::LegOutcome],
    trajectory: &'a [State],
}

pub fn eval(common: &Common, diagnostics_every: usize) -> Result<(), CliError> {
    let mut run = Run::start("eval", common)?;
    let ckpt = common
        .checkpoint
        .clone()
        .ok_or_else(|| CliError::Config("eval needs --checkpoint".into()))?;
    let (params, _) = run.checkpoint(&ckpt)?;
    run.cfg.arch = params.arch.clone();
    seeded(&mut run, common)?;
    if run.cfg.waypoints.is_empty() {
        return Err(CliError::Config("invalid configuration: waypoints: the course is empty".into()));
    }
    let map = run.map(common)?;
    let start = match run.cfg.waypoint_start {
        Some([x, y, phi]) => State::new(x, y, phi),
        None => {
            let p = home_position(&map, &map.rigid_clearance(run.cfg.reset_clearance + map.resolution), &run.cfg)?;
            State::new(p[0], p[1], 0.0)
        }
    };
    let mut nav = run.cfg.nav.clone();
    nav.max_steps = run.cfg.goal_timeout_steps();
    nav.record_diagnostics = diagnostics_every > 0;
    let report = evaluate_waypoints(&params, &map, start, &run.cfg.waypoints, &nav, run.cfg.seed)?;
    let logs_dir = common.out_dir.join("logs");
    save_logs(&report.logs, &logs_dir, "leg")?;
    run.artifacts.push(logs_dir);
    if diagnostics_every > 0 {
        let ddir = common.out_dir.join("diagnostics");
        for (leg, trace) in report.traces.iter().enumerate() {
            for (k, step) in trace.iter().enumerate().step_by(diagnostics_every) {
                let file = DiagnosticsFile {
                    step: step.clone(),
                    observation: (*report.logs[leg].observations[k]).clone(),
                    render: nav.render.clone(),
                    dt: nav.reward.dt,
                };
                write(&ddir.join(format!("leg{leg}_step{k:05}.json")), &json(&file)?)?;
            }
        }
        run.artifacts.push(ddir);
    }
    let summary = EvalSummary {
        success: report.success,
        path_length: report.path_length(&start),
        legs: &report.legs,
        trajectory: &report.trajectory,
    };
    run.artifacts.push(write(&common.out_dir.join("eval.json"), &json(&summary)?)?);
    println!(
        "{} ({} of {} waypoints, {:.1} m)",
        if report.success { "success" } else { "failure" },
        report.legs.iter().filter(|l| l.outcome == Some(errnav::controller::NavOutcome::ReachedGoal)).count(),
        report.legs.len(),
        summary.path_length
    );
    run.finish(common)
}

pub fn plot(common: &Common, logs: &[PathBuf], diagnostics: &[PathBuf], scale: f64) -> Result<(), CliError> {
    let mut run = Run::start("plot", common)?;
    if logs.is_empty() && diagnostics.is_empty() {
        return Err(CliError::Config("plot needs at least one --log or --diagnostics file".into()));
    }
    if !logs.is_empty() {
        let map = run.map(common)?;
        let mut path: Vec<State> = Vec::new();
        let mut goal = None;
        for p in logs {
            run.inputs.push(p.clone());
            let log = EpisodeLog::load(p)?;
            if log.states.is_empty() {
                return Err(CliError::Runtime(format!("{}: empty log", p.display())));
            }
            let skip = usize::from(!path.is_empty());
            path.extend_from_slice(&log.states[skip..]);
            goal = log.goal.or(goal);
        }
        let waypoints = if logs.len() > 1 { run.cfg.waypoints.clone() } else { Vec::new() };
        let svg = overhead_svg(&map, &OverheadPlot { path: &path, waypoints: &waypoints, goal }, scale)?;
        run.artifacts.push(write(&common.out_dir.join("overhead.svg"), &svg)?);
    }
    for p in diagnostics {
        run.inputs.push(p.clone());
        let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        let d: DiagnosticsFile = serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        let svg = ego_overlay_svg(&d.observation, &d.step, &d.render, d.dt, 12.0);
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "overlay".into());
        run.artifacts.push(write(&common.out_dir.join(format!("{stem}.svg")), &svg)?);
    }
    run.finish(common)
}
