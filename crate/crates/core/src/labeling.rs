//! Self-supervised regression targets.
//!
//! Episode logs are time-aligned to the image stream, the canonical model is
//! rolled out from every anchor, and the maximum planar deviation between the
//! canonical and realized trajectories becomes the label.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout, wrap_angle, ActionSequence, Control, State, Trajectory};
use crate::error::{Error, Result};
use crate::tensor_io::RawTensor;
use crate::terrain::EgoObservation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub horizon: usize,
    /// Number of past images in the history (m); the history holds m + 1.
    pub history_m: usize,
    /// Steps between consecutive history images (n).
    pub spacing_n: usize,
    /// Anchor stride between extracted windows.
    pub stride: usize,
    pub dt: f64,
    pub image_rate: f64,
    /// Labels above this value are clipped.
    pub tau_cap: f64,
    /// Weight of the wrapped heading error inside the norm. 0 keeps the
    /// norm planar.
    pub heading_weight: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            horizon: 20,
            history_m: 1,
            spacing_n: 10,
            stride: 10,
            dt: 0.1,
            image_rate: 10.0,
            tau_cap: 5.0,
            heading_weight: 0.0,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("label.horizon", "must be >= 1"));
        }
        if self.spacing_n == 0 {
            return Err(Error::config("label.spacing_n", "must be >= 1"));
        }
        if self.stride == 0 {
            return Err(Error::config("label.stride", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("label.dt", "must be positive"));
        }
        if !(self.image_rate > 0.0) {
            return Err(Error::config("label.image_rate", "must be positive"));
        }
        if !(self.tau_cap > 0.0) {
            return Err(Error::config("label.tau_cap", "must be positive"));
        }
        if self.heading_weight < 0.0 {
            return Err(Error::config("label.heading_weight", "must be non-negative"));
        }
        Ok(())
    }
}

/// Maximum planar deviation between `realized` and the canonical rollout of
/// `u` started from `realized[0]`.
pub fn model_error(realized: &Trajectory, u: &ActionSequence, dt: f64) -> f64 {
    model_error_weighted(realized, u, dt, 0.0)
}

/// [`model_error`] with an optional heading term `w * wrap(dphi)^2` inside
/// the norm.
pub fn model_error_weighted(realized: &Trajectory, u: &ActionSequence, dt: f64, heading_weight: f64) -> f64 {
    let canonical = rollout(realized.first(), u, dt);
    let mut tau = 0.0f64;
    for (c, r) in canonical.states.iter().zip(&realized.states) {
        let dx = c.chi - r.chi;
        let dy = c.y - r.y;
        let mut sq = dx * dx + dy * dy;
        if heading_weight > 0.0 {
            let dphi = wrap_angle(c.phi - r.phi);
            sq += heading_weight * dphi * dphi;
        }
        tau = tau.max(sq.sqrt());
    }
    tau
}

/// Everything recorded during one episode. Each stream has its own
/// timestamps.
#[derive(Debug, Clone, Default)]
pub struct EpisodeLog {
    pub episode: u64,
    pub state_times: Vec<f64>,
    pub states: Vec<State>,
    pub control_times: Vec<f64>,
    pub controls: Vec<Control>,
    pub observation_times: Vec<f64>,
    pub observations: Vec<Arc<EgoObservation>>,
    pub goal: Option<[f64; 2]>,
}

fn strictly_increasing(ts: &[f64]) -> bool {
    ts.windows(2).all(|w| w[0] < w[1])
}

impl EpisodeLog {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Error::config(format!("episode {}", self.episode), what.to_string());
        if self.states.is_empty() || self.controls.is_empty() || self.observations.is_empty() {
            return Err(bad("empty stream"));
        }
        if self.state_times.len() != self.states.len()
            || self.control_times.len() != self.controls.len()
            || self.observation_times.len() != self.observations.len()
        {
            return Err(bad("timestamp count does not match stream length"));
        }
        if !strictly_increasing(&self.state_times)
            || !strictly_increasing(&self.control_times)
            || !strictly_increasing(&self.observation_times)
        {
            return Err(bad("timestamps must be strictly increasing"));
        }
        Ok(())
    }

    /// Simulated duration covered by the state stream.
    pub fn duration(&self) -> f64 {
        match (self.state_times.first(), self.state_times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// One time-aligned record at an image timestamp.
#[derive(Debug, Clone)]
pub struct AlignedRecord {
    pub t: f64,
    pub state: State,
    pub control: Control,
    pub observation: Arc<EgoObservation>,
}

fn interpolate_state(times: &[f64], states: &[State], t: f64) -> State {
    // first index with time > t
    let hi = times.partition_point(|&s| s <= t);
    let lo = hi - 1;
    if times[lo] == t || hi == times.len() {
        return states[lo];
    }
    let a = &states[lo];
    let b = &states[hi];
    let alpha = (t - times[lo]) / (times[hi] - times[lo]);
    State {
        chi: a.chi + (b.chi - a.chi) * alpha,
        y: a.y + (b.y - a.y) * alpha,
        phi: a.phi + wrap_angle(b.phi - a.phi) * alpha,
    }
}

/// Sub-samples the images to `image_rate` and aligns states (linear, heading
/// along the shortest arc) and controls (zero-order hold) to each kept image
/// timestamp.
pub fn align(log: &EpisodeLog, image_rate: f64) -> Result<Vec<AlignedRecord>> {
    log.validate()?;
    let period = 1.0 / image_rate;
    let (s0, s1) = (log.state_times[0], *log.state_times.last().unwrap());
    let c0 = log.control_times[0];
    let mut out = Vec::with_capacity(log.observations.len());
    let mut last_kept: Option<f64> = None;
    for (&t, obs) in log.observation_times.iter().zip(&log.observations) {
        if last_kept.is_some_and(|k| t < k + period - 1e-9) {
            continue;
        }
        if t < s0 || t > s1 || t < c0 {
            return Err(Error::InsufficientOverlap { t });
        }
        last_kept = Some(t);
        let ci = log.control_times.partition_point(|&s| s <= t) - 1;
        out.push(AlignedRecord {
            t,
            state: interpolate_state(&log.state_times, &log.states, t),
            control: log.controls[ci],
            observation: Arc::clone(obs),
        });
    }
    Ok(out)
}

/// `m + 1` images spaced `n` steps apart, newest first.
#[derive(Debug, Clone)]
pub struct ImageHistory {
    pub images: Vec<Arc<EgoObservation>>,
    pub spacing_steps: usize,
}

impl ImageHistory {
    pub fn new(images: Vec<Arc<EgoObservation>>, spacing_steps: usize) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::config("history", "needs at least one image"));
        }
        if images.iter().any(|im| !im.same_dims(&images[0])) {
            return Err(Error::config("history", "images differ in size"));
        }
        Ok(Self { images, spacing_steps })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub round: u32,
    pub episode: u64,
    pub anchor_time: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorSample {
    pub history: ImageHistory,
    pub actions: ActionSequence,
    pub tau: f64,
    pub start_state: State,
    pub provenance: Provenance,
}

/// Cuts windows out of an aligned stream. Anchor `t` needs `m * n` steps of
/// image history behind it and `H` controls ahead; anchors advance by
/// `stride`, giving `floor(valid_anchors / stride)` samples.
pub fn extract_samples(aligned: &[AlignedRecord], cfg: &LabelConfig, round: u32, episode: u64) -> Vec<ErrorSample> {
    let back = cfg.history_m * cfg.spacing_n;
    let h = cfg.horizon;
    if aligned.len() < back + h + 1 {
        return Vec::new();
    }
    let valid = aligned.len() - h - back;
    let count = valid / cfg.stride;
    (0..count)
        .map(|j| {
            let t = back + j * cfg.stride;
            let images = (0..=cfg.history_m).map(|i| Arc::clone(&aligned[t - i * cfg.spacing_n].observation)).collect();
            let actions = ActionSequence::new(aligned[t..t + h].iter().map(|r| r.control).collect());
            let realized = Trajectory { states: aligned[t..=t + h].iter().map(|r| r.state).collect(), dt: cfg.dt };
            let tau = model_error_weighted(&realized, &actions, cfg.dt, cfg.heading_weight).min(cfg.tau_cap);
            ErrorSample {
                history: ImageHistory { images, spacing_steps: cfg.spacing_n },
                actions,
                tau,
                start_state: aligned[t].state,
                provenance: Provenance { round, episode, anchor_time: aligned[t].t },
            }
        })
        .collect()
}

/// The growing labeled corpus.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<ErrorSample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn merge(&mut self, other: Dataset) {
        self.samples.extend(other.samples);
    }

    /// Aligns and labels each log, tagging samples with `round`.
    pub fn from_logs(logs: &[EpisodeLog], cfg: &LabelConfig, round: u32) -> Result<Dataset> {
        let mut samples = Vec::new();
        for log in logs {
            let aligned = align(log, cfg.image_rate)?;
            samples.extend(extract_samples(&aligned, cfg, round, log.episode));
        }
        Ok(Dataset { samples })
    }

    /// Writes `manifest.jsonl` plus one observation tensor per episode into
    /// `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let obs_dir = dir.join("observations");
        std::fs::create_dir_all(&obs_dir).map_err(|e| Error::io(&obs_dir, e))?;

        // Distinct observations per (round, episode), in first-use order.
        let mut files: Vec<((u32, u64), Vec<Arc<EgoObservation>>)> = Vec::new();
        let mut index: HashMap<*const EgoObservation, (usize, usize)> = HashMap::new();
        for s in &self.samples {
            let key = (s.provenance.round, s.provenance.episode);
            let fi = match files.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    files.push((key, Vec::new()));
                    files.len() - 1
                }
            };
            for im in &s.history.images {
                index.entry(Arc::as_ptr(im)).or_insert_with(|| {
                    files[fi].1.push(Arc::clone(im));
                    (fi, files[fi].1.len() - 1)
                });
            }
        }
        let names: Vec<String> = files.iter().map(|((r, e), _)| format!("observations/r{r:02}_ep{e:05}.metn")).collect();
        for (name, (_, images)) in names.iter().zip(&files) {
            let first = &images[0];
            let mut data = Vec::with_capacity(images.len() * first.pixels.len());
            for im in images {
                data.extend_from_slice(&im.pixels);
            }
            let t = RawTensor::new(vec![images.len(), first.channels, first.height, first.width], data)?;
            t.save(&dir.join(name))?;
        }

        let path = dir.join("manifest.jsonl");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for s in &self.samples {
            let record = ManifestRecord {
                round: s.provenance.round,
                episode: s.provenance.episode,
                anchor_time: s.provenance.anchor_time,
                tau: s.tau,
                start_state: s.start_state,
                actions: s.actions.iter().map(|c| [c.v, c.omega]).collect(),
                spacing_steps: s.history.spacing_steps,
                observations: s
                    .history
                    .images
                    .iter()
                    .map(|im| {
                        let (fi, idx) = index[&Arc::as_ptr(im)];
                        ObservationRef { file: names[fi].clone(), index: idx }
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let path = dir.join("manifest.jsonl");
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut cache: HashMap<String, Vec<Arc<EgoObservation>>> = HashMap::new();
        let mut samples = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(&line)?;
            let mut images = Vec::with_capacity(rec.observations.len());
            for r in &rec.observations {
                if !cache.contains_key(&r.file) {
                    let t = RawTensor::load(&dir.join(&r.file))?;
                    if t.dims.len() != 4 {
                        return Err(Error::TensorFormat(format!("{}: expected rank 4", r.file)));
                    }
                    let (c, h, w) = (t.dims[1], t.dims[2], t.dims[3]);
                    let per = c * h * w;
                    let list = t
                        .data
                        .chunks_exact(per)
                        .map(|px| Arc::new(EgoObservation { channels: c, height: h, width: w, pixels: px.to_vec() }))
                        .collect();
                    cache.insert(r.file.clone(), list);
                }
                let list = &cache[&r.file];
                let im = list
                    .get(r.index)
                    .ok_or_else(|| Error::TensorFormat(format!("{}: index {} out of range", r.file, r.index)))?;
                images.push(Arc::clone(im));
            }
            samples.push(ErrorSample {
                history: ImageHistory { images, spacing_steps: rec.spacing_steps },
                actions: ActionSequence::new(rec.actions.iter().map(|a| Control::new(a[0], a[1])).collect()),
                tau: rec.tau,
                start_state: rec.start_state,
                provenance: Provenance { round: rec.round, episode: rec.episode, anchor_time: rec.anchor_time },
            });
        }
        Ok(Dataset { samples })
    }
}

#[derive(Serialize, Deserialize)]
struct ObservationRef {
    file: String,
    index: usize,
}

#[derive(Serialize, Deserialize)]
struct ManifestRecord {
    round: u32,
    episode: u64,
    anchor_time: f64,
    tau: f64,
    start_state: State,
    actions: Vec<[f64; 2]>,
    spacing_steps: usize,
    observations: Vec<ObservationRef>,
}

/// On-disk form of an [`EpisodeLog`]: streams as JSON, images as a tensor.
#[derive(Serialize, Deserialize)]
struct LogFile {
    episode: u64,
    state_times: Vec<f64>,
    states: Vec<State>,
    control_times: Vec<f64>,
    controls: Vec<Control>,
    observation_times: Vec<f64>,
    goal: Option<[f64; 2]>,
}

impl EpisodeLog {
    /// Writes `<stem>.json` and, if there are observations, `<stem>.metn`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let lf = LogFile {
            episode: self.episode,
            state_times: self.state_times.clone(),
            states: self.states.clone(),
            control_times: self.control_times.clone(),
            controls: self.controls.clone(),
            observation_times: self.observation_times.clone(),
            goal: self.goal,
        };
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, serde_json::to_string(&lf)?).map_err(|e| Error::io(&path, e))?;
        if let Some(first) = self.observations.first() {
            let mut data = Vec::with_capacity(self.observations.len() * first.pixels.len());
            for o in &self.observations {
                data.extend_from_slice(&o.pixels);
            }
            RawTensor::new(vec![self.observations.len(), first.channels, first.height, first.width], data)?
                .save(&dir.join(format!("{stem}.metn")))?;
        }
        Ok(())
    }

    /// Loads a log written by [`EpisodeLog::save`]. Observations are loaded
    /// when the tensor file exists.
    pub fn load(json_path: &Path) -> Result<EpisodeLog> {
        let text = std::fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
        let lf: LogFile = serde_json::from_str(&text)?;
        let tensor_path = json_path.with_extension("metn");
        let observations = if tensor_path.exists() {
            let t = RawTensor::load(&tensor_path)?;
            let (c, h, w) = (t.dims[1], t.dims[2], t.dims[3]);
            t.data
                .chunks_exact(c * h * w)
                .map(|px| Arc::new(EgoObservation { channels: c, height: h, width: w, pixels: px.to_vec() }))
                .collect()
        } else {
            Vec::new()
        };
        Ok(EpisodeLog {
            episode: lf.episode,
            state_times: lf.state_times,
            states: lf.states,
            control_times: lf.control_times,
            controls: lf.controls,
            observation_times: lf.observation_times,
            observations,
            goal: lf.goal,
        })
    }
}
