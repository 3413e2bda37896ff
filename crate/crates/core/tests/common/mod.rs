#![allow(dead_code)]

use std::sync::Arc;

use errnav::dynamics::{ActionSequence, Control, State};
use errnav::labeling::{ErrorSample, ImageHistory, Provenance};
use errnav::regressor::{backward, loss, ArchConfig, RegressorParams};
use errnav::terrain::EgoObservation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 8x8 images, H = 3, every width <= 8.
pub fn tiny_arch() -> ArchConfig {
    ArchConfig {
        obs_height: 8,
        obs_width: 8,
        horizon: 3,
        conv_channels: vec![4, 6, 8],
        action_hidden: 8,
        action_embed: 6,
        lstm_hidden: 8,
        head_hidden: 8,
        ..Default::default()
    }
}

pub fn random_sample(arch: &ArchConfig, rng: &mut ChaCha8Rng) -> ErrorSample {
    let n = arch.obs_channels * arch.obs_height * arch.obs_width;
    let images = (0..arch.history_len)
        .map(|_| {
            Arc::new(EgoObservation {
                channels: arch.obs_channels,
                height: arch.obs_height,
                width: arch.obs_width,
                pixels: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            })
        })
        .collect();
    ErrorSample {
        history: ImageHistory { images, spacing_steps: 10 },
        actions: ActionSequence::new(
            (0..arch.horizon)
                .map(|_| Control::new(rng.random_range(0.0..0.8), rng.random_range(-1.5..1.5)))
                .collect(),
        ),
        tau: rng.random_range(0.0..1.6),
        start_state: State::default(),
        provenance: Provenance::default(),
    }
}

#[derive(Debug)]
pub struct GradCheck {
    pub tensor: String,
    pub max_rel_err: f64,
    pub checked: usize,
}

/// Central finite differences (step 1e-4) on every component of every
/// tensor, compared against `backward`. Relative error uses
/// `max(|analytic|, |numeric|, 1e-6)` as the denominator so that components
/// which are zero to rounding are compared absolutely.
pub fn finite_difference_check(seed: u64, batch_size: usize) -> Vec<GradCheck> {
    let arch = tiny_arch();
    let params = RegressorParams::init(&arch, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000));
    let batch: Vec<ErrorSample> = (0..batch_size).map(|_| random_sample(&arch, &mut rng)).collect();
    let refs: Vec<&ErrorSample> = batch.iter().collect();
    let (_, grad) = backward(&params, &refs).unwrap();
    let h = 1e-4;
    let mut out = Vec::new();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let analytic = grad.tensors()[ti].1.data.clone();
        let mut worst = 0.0f64;
        for k in 0..analytic.len() {
            let mut p = params.clone();
            p.tensors_mut()[ti].1.data[k] += h;
            let up = loss(&p, &refs).unwrap();
            p.tensors_mut()[ti].1.data[k] -= 2.0 * h;
            let dn = loss(&p, &refs).unwrap();
            let numeric = (up - dn) / (2.0 * h);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        out.push(GradCheck { tensor: name.clone(), max_rel_err: worst, checked: analytic.len() });
    }
    out
}
