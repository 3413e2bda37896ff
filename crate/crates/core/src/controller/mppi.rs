use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::predictor::Predictor;
use super::reward::{total_reward, RewardConfig};
use crate::dynamics::{ActionSequence, Control, State};
use crate::error::{Error, Result};
use crate::labeling::ImageHistory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiConfig {
    pub num_samples: usize,
    /// Covariance of the per-step `(v, omega)` perturbation.
    pub sampling_cov: [[f64; 2]; 2],
    /// Weight on the fresh sample in the first-order action filter.
    pub smoothing: f64,
    /// Inverse temperature of the exponential reward weighting.
    pub reward_weight: f64,
    pub omega_bound: f64,
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            num_samples: 128,
            sampling_cov: [[0.25, 0.0], [0.0, 0.25]],
            smoothing: 0.5,
            reward_weight: 50.0,
            omega_bound: 1.5,
            seed: 0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::config("mppi.num_samples", "must be >= 1"));
        }
        let c = self.sampling_cov;
        if c[0][1] != c[1][0] {
            return Err(Error::config("mppi.sampling_cov", "must be symmetric"));
        }
        if !(c[0][0] >= 0.0 && c[1][1] >= 0.0 && c[0][0] * c[1][1] - c[0][1] * c[1][0] >= 0.0) {
            return Err(Error::config("mppi.sampling_cov", "must be positive semi-definite"));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(Error::config("mppi.smoothing", "must lie in [0, 1]"));
        }
        if !(self.reward_weight >= 0.0 && self.reward_weight.is_finite()) {
            return Err(Error::config("mppi.reward_weight", "must be finite and non-negative"));
        }
        if !(self.omega_bound >= 0.0) {
            return Err(Error::config("mppi.omega_bound", "must be non-negative"));
        }
        Ok(())
    }

    /// Lower-triangular factor `L` with `L L^T = sampling_cov`.
    pub fn cholesky(&self) -> [[f64; 2]; 2] {
        let c = self.sampling_cov;
        let l00 = c[0][0].max(0.0).sqrt();
        let l10 = if l00 > 0.0 { c[1][0] / l00 } else { 0.0 };
        let l11 = (c[1][1] - l10 * l10).max(0.0).sqrt();
        [[l00, 0.0], [l10, l11]]
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MppiDiagnostics {
    pub samples: Vec<ActionSequence>,
    pub rewards: Vec<f64>,
    pub weights: Vec<f64>,
    /// Reward-weighted mean before the warm-start shift.
    pub mean: ActionSequence,
    /// Predicted model error of `mean`.
    pub chosen_tau: f64,
}

#[derive(Debug, Clone)]
pub struct MppiStep {
    pub executed: Control,
    /// Warm start for the next cycle: `mean` shifted left, last action repeated.
    pub next_nominal: ActionSequence,
    pub diagnostics: MppiDiagnostics,
}

fn clamp_control(u: Control, v_max: f64, omega_bound: f64) -> Control {
    Control::new(u.v.clamp(0.0, v_max), u.omega.clamp(-omega_bound, omega_bound))
}

/// Draws one filtered, clamped perturbation of `nominal`.
pub fn sample_sequence<R: Rng + ?Sized>(
    nominal: &ActionSequence,
    chol: &[[f64; 2]; 2],
    cfg: &MppiConfig,
    v_max: f64,
    rng: &mut R,
) -> ActionSequence {
    let b = cfg.smoothing;
    let mut prev = nominal[0];
    let mut out = Vec::with_capacity(nominal.horizon());
    for n in nominal.iter() {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        let e = (chol[0][0] * z0, chol[1][0] * z0 + chol[1][1] * z1);
        let f = Control::new(b * (n.v + e.0) + (1.0 - b) * prev.v, b * (n.omega + e.1) + (1.0 - b) * prev.omega);
        out.push(clamp_control(f, v_max, cfg.omega_bound));
        prev = f;
    }
    ActionSequence::new(out)
}

/// Normalised `exp(gamma * (r - max r))`.
pub fn softmax_weights(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let max = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = rewards.iter().map(|&r| (gamma * (r - max)).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// `sum_i w_i s_i`, accumulated as offsets from the best sample so that a
/// one-hot or degenerate weighting reproduces that sample exactly.
pub fn weighted_mean(samples: &[ActionSequence], weights: &[f64], best: usize) -> ActionSequence {
    let reference = &samples[best];
    let mut out = reference.controls.clone();
    for (t, slot) in out.iter_mut().enumerate() {
        let (mut dv, mut dw) = (0.0, 0.0);
        for (s, &w) in samples.iter().zip(weights) {
            dv += w * (s[t].v - reference[t].v);
            dw += w * (s[t].omega - reference[t].omega);
        }
        slot.v += dv;
        slot.omega += dw;
    }
    ActionSequence::new(out)
}

fn shift_left(u: &ActionSequence) -> ActionSequence {
    let mut c: Vec<Control> = u.controls[1..].to_vec();
    c.push(*u.controls.last().expect("non-empty sequence"));
    ActionSequence::new(c)
}

/// One MPPI cycle around `nominal` from `x0`.
#[allow(clippy::too_many_arguments)]
pub fn mppi_step<P: Predictor + ?Sized, R: Rng + ?Sized>(
    nominal: &ActionSequence,
    x0: &State,
    history: &ImageHistory,
    goal: [f64; 2],
    predictor: &P,
    reward: &RewardConfig,
    cfg: &MppiConfig,
    rng: &mut R,
) -> Result<MppiStep> {
    if nominal.horizon() != reward.horizon {
        return Err(Error::ShapeMismatch {
            name: "nominal".into(),
            expected: vec![reward.horizon],
            got: vec![nominal.horizon()],
        });
    }
    let chol = cfg.cholesky();
    let samples: Vec<ActionSequence> =
        (0..cfg.num_samples).map(|_| sample_sequence(nominal, &chol, cfg, reward.v_max, rng)).collect();
    let enc = predictor.encode(history)?;
    let rewards: Vec<f64> = samples
        .iter()
        .map(|s| total_reward(x0, s, goal, predictor.predict(&enc, s), reward))
        .collect();
    let weights = softmax_weights(&rewards, cfg.reward_weight);
    let best = rewards
        .iter()
        .enumerate()
        .fold(0, |b, (i, &r)| if r > rewards[b] { i } else { b });
    let mut mean = weighted_mean(&samples, &weights, best);
    for u in mean.controls.iter_mut() {
        *u = clamp_control(*u, reward.v_max, cfg.omega_bound);
    }
    let chosen_tau = predictor.predict(&enc, &mean);
    Ok(MppiStep {
        executed: mean[0],
        next_nominal: shift_left(&mean),
        diagnostics: MppiDiagnostics { samples, rewards, weights, mean, chosen_tau },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::predictor::ConstantPredictor;
    use crate::terrain::EgoObservation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn history() -> ImageHistory {
        ImageHistory::new(vec![Arc::new(EgoObservation::filled(4, 4, [0.0; 3]))], 10).unwrap()
    }

    fn nominal() -> ActionSequence {
        ActionSequence::new((0..20).map(|t| Control::new(0.4, 0.05 * t as f64 - 0.5)).collect())
    }

    #[test]
    fn zero_covariance_returns_filtered_nominal() {
        let cfg = MppiConfig { sampling_cov: [[0.0; 2]; 2], ..Default::default() };
        let reward = RewardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = mppi_step(&nominal(), &State::default(), &history(), [5.0, 0.0], &ConstantPredictor(0.0), &reward, &cfg, &mut rng)
            .unwrap();
        let filtered = sample_sequence(&nominal(), &cfg.cholesky(), &cfg, reward.v_max, &mut rng);
        assert_eq!(step.diagnostics.mean, filtered);
        for s in &step.diagnostics.samples {
            assert_eq!(*s, filtered);
        }
    }

    #[test]
    fn filter_starts_from_first_nominal_action() {
        let cfg = MppiConfig { sampling_cov: [[0.0; 2]; 2], ..Default::default() };
        let nom = ActionSequence::new(vec![Control::new(0.2, 0.0), Control::new(0.6, 1.0), Control::new(0.6, 1.0)]);
        let s = sample_sequence(&nom, &cfg.cholesky(), &cfg, 0.8, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.controls, vec![Control::new(0.2, 0.0), Control::new(0.4, 0.5), Control::new(0.5, 0.75)]);
    }

    #[test]
    fn equal_rewards_give_the_plain_mean() {
        let cfg = MppiConfig::default();
        let reward = RewardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // goal at the start: every sample scores 0
        let step = mppi_step(&nominal(), &State::default(), &history(), [0.0, 0.0], &ConstantPredictor(0.0), &reward, &cfg, &mut rng)
            .unwrap();
        let n = step.diagnostics.samples.len() as f64;
        for t in 0..20 {
            let mv: f64 = step.diagnostics.samples.iter().map(|s| s[t].v).sum::<f64>() / n;
            let mw: f64 = step.diagnostics.samples.iter().map(|s| s[t].omega).sum::<f64>() / n;
            assert!((step.diagnostics.mean[t].v - mv).abs() < 1e-9);
            assert!((step.diagnostics.mean[t].omega - mw).abs() < 1e-9);
        }
    }

    #[test]
    fn sharp_weighting_picks_the_best_sample() {
        let cfg = MppiConfig { reward_weight: 1e6, ..Default::default() };
        let reward = RewardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let step = mppi_step(&nominal(), &State::default(), &history(), [3.0, 1.0], &ConstantPredictor(0.0), &reward, &cfg, &mut rng)
            .unwrap();
        let d = &step.diagnostics;
        let best = d.rewards.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        for t in 0..20 {
            assert!((d.mean[t].v - d.samples[best][t].v).abs() < 1e-6);
            assert!((d.mean[t].omega - d.samples[best][t].omega).abs() < 1e-6);
        }
    }

    #[test]
    fn weights_ignore_reward_offsets() {
        let r = [0.3, -1.0, 0.9, 0.2];
        let shifted: Vec<f64> = r.iter().map(|x| x + 123.0).collect();
        let (a, b) = (softmax_weights(&r, 50.0), softmax_weights(&shifted, 50.0));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_given_seed_and_shift_repeats_last() {
        let cfg = MppiConfig::default();
        let reward = RewardConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            mppi_step(&nominal(), &State::default(), &history(), [4.0, 2.0], &ConstantPredictor(0.1), &reward, &cfg, &mut rng).unwrap()
        };
        let (a, b) = (run(3), run(3));
        assert_eq!(a.diagnostics.mean, b.diagnostics.mean);
        assert_eq!(a.executed, a.diagnostics.mean[0]);
        assert_eq!(a.next_nominal[18], a.diagnostics.mean[19]);
        assert_eq!(a.next_nominal[19], a.diagnostics.mean[19]);
        assert_eq!(a.next_nominal[0], a.diagnostics.mean[1]);
        for u in a.diagnostics.mean.iter() {
            assert!((0.0..=0.8).contains(&u.v) && u.omega.abs() <= 1.5);
        }
    }

    #[test]
    fn cholesky_reproduces_covariance() {
        let cfg = MppiConfig { sampling_cov: [[0.5, 0.2], [0.2, 0.3]], ..Default::default() };
        let l = cfg.cholesky();
        let back = [
            [l[0][0] * l[0][0], l[0][0] * l[1][0]],
            [l[1][0] * l[0][0], l[1][0] * l[1][0] + l[1][1] * l[1][1]],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - cfg.sampling_cov[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_covariance() {
        let cfg = MppiConfig { sampling_cov: [[0.5, 0.2], [0.1, 0.3]], ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
