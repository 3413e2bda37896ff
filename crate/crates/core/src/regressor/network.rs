use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{conv_out_size, leaky_relu, leaky_relu_grad, Conv2d, Dense, LstmCell, LstmStep, Tensor};
use crate::dynamics::ActionSequence;
use crate::error::{Error, Result};
use crate::labeling::{ErrorSample, ImageHistory};

/// Layer sizes of the two-prong network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub obs_channels: usize,
    pub obs_height: usize,
    pub obs_width: usize,
    /// Images per history (m + 1).
    pub history_len: usize,
    pub horizon: usize,
    pub conv_channels: Vec<usize>,
    pub action_hidden: usize,
    pub action_embed: usize,
    pub lstm_hidden: usize,
    pub head_hidden: usize,
    pub leaky_slope: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            obs_channels: 3,
            obs_height: 32,
            obs_width: 32,
            history_len: 2,
            horizon: 20,
            conv_channels: vec![8, 16, 32],
            action_hidden: 16,
            action_embed: 32,
            lstm_hidden: 64,
            head_hidden: 64,
            leaky_slope: 0.01,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        let widths = [
            ("obs_channels", self.obs_channels),
            ("obs_height", self.obs_height),
            ("obs_width", self.obs_width),
            ("history_len", self.history_len),
            ("horizon", self.horizon),
            ("action_hidden", self.action_hidden),
            ("action_embed", self.action_embed),
            ("lstm_hidden", self.lstm_hidden),
            ("head_hidden", self.head_hidden),
        ];
        for (name, v) in widths {
            if v == 0 {
                return Err(Error::config(format!("arch.{name}"), "must be >= 1"));
            }
        }
        if self.conv_channels.is_empty() || self.conv_channels.contains(&0) {
            return Err(Error::config("arch.conv_channels", "needs at least one layer, all widths >= 1"));
        }
        if !(self.leaky_slope >= 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config("arch.leaky_slope", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Spatial size after the conv stack.
    pub fn conv_output_hw(&self) -> (usize, usize) {
        self.conv_channels
            .iter()
            .fold((self.obs_height, self.obs_width), |(h, w), _| (conv_out_size(h), conv_out_size(w)))
    }

    pub fn embed_len(&self) -> usize {
        let (h, w) = self.conv_output_hw();
        h * w * self.conv_channels.last().copied().unwrap_or(0)
    }

    fn input_channels(&self) -> usize {
        self.obs_channels * self.history_len
    }
}

/// Every learnable tensor of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorParams {
    pub arch: ArchConfig,
    pub conv: Vec<Conv2d>,
    pub init_h: Dense,
    pub init_c: Dense,
    pub action1: Dense,
    pub action2: Dense,
    pub lstm: LstmCell,
    pub head1: Dense,
    pub head2: Dense,
}

impl RegressorParams {
    pub fn zeros(arch: &ArchConfig) -> Self {
        let mut cin = arch.input_channels();
        let conv = arch
            .conv_channels
            .iter()
            .map(|&c| {
                let l = Conv2d::zeros(cin, c);
                cin = c;
                l
            })
            .collect();
        let e = arch.embed_len();
        Self {
            arch: arch.clone(),
            conv,
            init_h: Dense::zeros(e, arch.lstm_hidden),
            init_c: Dense::zeros(e, arch.lstm_hidden),
            action1: Dense::zeros(2, arch.action_hidden),
            action2: Dense::zeros(arch.action_hidden, arch.action_embed),
            lstm: LstmCell::zeros(arch.action_embed, arch.lstm_hidden),
            head1: Dense::zeros(arch.horizon * arch.lstm_hidden, arch.head_hidden),
            head2: Dense::zeros(arch.head_hidden, 1),
        }
    }

    /// Fan-in scaled uniform initialisation.
    pub fn init(arch: &ArchConfig, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cin = arch.input_channels();
        let conv = arch
            .conv_channels
            .iter()
            .map(|&c| {
                let l = Conv2d::init(cin, c, &mut rng);
                cin = c;
                l
            })
            .collect();
        let e = arch.embed_len();
        Ok(Self {
            arch: arch.clone(),
            conv,
            init_h: Dense::init(e, arch.lstm_hidden, &mut rng),
            init_c: Dense::init(e, arch.lstm_hidden, &mut rng),
            action1: Dense::init(2, arch.action_hidden, &mut rng),
            action2: Dense::init(arch.action_hidden, arch.action_embed, &mut rng),
            lstm: LstmCell::init(arch.action_embed, arch.lstm_hidden, &mut rng),
            head1: Dense::init(arch.horizon * arch.lstm_hidden, arch.head_hidden, &mut rng),
            head2: Dense::init(arch.head_hidden, 1, &mut rng),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.arch)
    }

    /// Named tensors in a fixed canonical order.
    pub fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv{i}.weight"), &c.weight));
            out.push((format!("conv{i}.bias"), &c.bias));
        }
        for (name, d) in [
            ("init_h", &self.init_h),
            ("init_c", &self.init_c),
            ("action1", &self.action1),
            ("action2", &self.action2),
        ] {
            out.push((format!("{name}.weight"), &d.weight));
            out.push((format!("{name}.bias"), &d.bias));
        }
        out.push(("lstm.w_ih".into(), &self.lstm.w_ih));
        out.push(("lstm.w_hh".into(), &self.lstm.w_hh));
        out.push(("lstm.bias".into(), &self.lstm.bias));
        for (name, d) in [("head1", &self.head1), ("head2", &self.head2)] {
            out.push((format!("{name}.weight"), &d.weight));
            out.push((format!("{name}.bias"), &d.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter_mut().enumerate() {
            out.push((format!("conv{i}.weight"), &mut c.weight));
            out.push((format!("conv{i}.bias"), &mut c.bias));
        }
        for (name, d) in [
            ("init_h", &mut self.init_h),
            ("init_c", &mut self.init_c),
            ("action1", &mut self.action1),
            ("action2", &mut self.action2),
        ] {
            out.push((format!("{name}.weight"), &mut d.weight));
            out.push((format!("{name}.bias"), &mut d.bias));
        }
        out.push(("lstm.w_ih".into(), &mut self.lstm.w_ih));
        out.push(("lstm.w_hh".into(), &mut self.lstm.w_hh));
        out.push(("lstm.bias".into(), &mut self.lstm.bias));
        for (name, d) in [("head1", &mut self.head1), ("head2", &mut self.head2)] {
            out.push((format!("{name}.weight"), &mut d.weight));
            out.push((format!("{name}.bias"), &mut d.bias));
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.data.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &RegressorParams, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn check_inputs(&self, history: &ImageHistory, actions: &ActionSequence) -> Result<()> {
        let a = &self.arch;
        if history.images.len() != a.history_len {
            return Err(Error::ShapeMismatch {
                name: "history".into(),
                expected: vec![a.history_len],
                got: vec![history.images.len()],
            });
        }
        for im in &history.images {
            let got = vec![im.channels, im.height, im.width];
            if got != [a.obs_channels, a.obs_height, a.obs_width] || im.pixels.len() != got.iter().product::<usize>() {
                return Err(Error::ShapeMismatch {
                    name: "history.image".into(),
                    expected: vec![a.obs_channels, a.obs_height, a.obs_width],
                    got,
                });
            }
        }
        if actions.horizon() != a.horizon {
            return Err(Error::ShapeMismatch {
                name: "actions".into(),
                expected: vec![a.horizon, 2],
                got: vec![actions.horizon(), 2],
            });
        }
        Ok(())
    }

    fn stack_images(&self, history: &ImageHistory) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.arch.input_channels() * self.arch.obs_height * self.arch.obs_width);
        for im in &history.images {
            x.extend(im.pixels.iter().map(|&p| p as f64));
        }
        x
    }

    /// Runs the image prong once. The result can score any number of action
    /// sequences against the same history.
    pub fn encode(&self, history: &ImageHistory) -> Result<ImageEncoding> {
        let dummy = ActionSequence::constant(Default::default(), self.arch.horizon);
        self.check_inputs(history, &dummy)?;
        let slope = self.arch.leaky_slope;
        let (mut x, mut h, mut w) = (self.stack_images(history), self.arch.obs_height, self.arch.obs_width);
        for layer in &self.conv {
            let (mut y, oh, ow) = layer.forward(&x, h, w);
            y.iter_mut().for_each(|v| *v = leaky_relu(*v, slope));
            x = y;
            h = oh;
            w = ow;
        }
        Ok(ImageEncoding { h0: self.init_h.forward(&x), c0: self.init_c.forward(&x) })
    }

    /// Predicted model error for one action sequence given an encoded history.
    pub fn predict_encoded(&self, enc: &ImageEncoding, actions: &ActionSequence) -> f64 {
        let slope = self.arch.leaky_slope;
        let hd = self.arch.lstm_hidden;
        let mut h = enc.h0.clone();
        let mut c = enc.c0.clone();
        let mut a1 = vec![0.0; self.arch.action_hidden];
        let mut a2 = vec![0.0; self.arch.action_embed];
        let mut scratch = Vec::with_capacity(4 * hd);
        let mut concat = vec![0.0; self.arch.horizon * hd];
        for (t, u) in actions.iter().enumerate() {
            self.action1.forward_into(&[u.v, u.omega], &mut a1);
            a1.iter_mut().for_each(|v| *v = leaky_relu(*v, slope));
            self.action2.forward_into(&a1, &mut a2);
            a2.iter_mut().for_each(|v| *v = leaky_relu(*v, slope));
            self.lstm.step(&a2, &mut h, &mut c, &mut scratch);
            concat[t * hd..(t + 1) * hd].copy_from_slice(&h);
        }
        let mut z = self.head1.forward(&concat);
        z.iter_mut().for_each(|v| *v = leaky_relu(*v, slope));
        self.head2.forward(&z)[0]
    }

    /// Scalar model-error estimate for one (history, actions) pair.
    pub fn forward(&self, history: &ImageHistory, actions: &ActionSequence) -> Result<f64> {
        self.check_inputs(history, actions)?;
        let enc = self.encode(history)?;
        Ok(self.predict_encoded(&enc, actions))
    }

    fn forward_cached(&self, history: &ImageHistory, actions: &ActionSequence) -> Result<Cache> {
        self.check_inputs(history, actions)?;
        let slope = self.arch.leaky_slope;
        let mut cache = Cache::default();
        let (mut x, mut h, mut w) = (self.stack_images(history), self.arch.obs_height, self.arch.obs_width);
        for layer in &self.conv {
            let (pre, oh, ow) = layer.forward(&x, h, w);
            let post: Vec<f64> = pre.iter().map(|&v| leaky_relu(v, slope)).collect();
            cache.conv.push(ConvCache { input: x, h, w, pre });
            x = post;
            h = oh;
            w = ow;
        }
        let h0 = self.init_h.forward(&x);
        let c0 = self.init_c.forward(&x);
        cache.embed = x;

        let hd = self.arch.lstm_hidden;
        let (mut hs, mut cs) = (h0, c0);
        let mut concat = Vec::with_capacity(self.arch.horizon * hd);
        for u in actions.iter() {
            let input = [u.v, u.omega];
            let pre1 = self.action1.forward(&input);
            let a1: Vec<f64> = pre1.iter().map(|&v| leaky_relu(v, slope)).collect();
            let pre2 = self.action2.forward(&a1);
            let a2: Vec<f64> = pre2.iter().map(|&v| leaky_relu(v, slope)).collect();
            let step = self.lstm.step_cached(&a2, &hs, &cs);
            hs = step.h.clone();
            cs = step.c.clone();
            concat.extend_from_slice(&step.h);
            cache.actions.push(ActionCache { input, pre1, a1, pre2 });
            cache.lstm.push(step);
        }
        let head_pre = self.head1.forward(&concat);
        let head_a: Vec<f64> = head_pre.iter().map(|&v| leaky_relu(v, slope)).collect();
        cache.output = self.head2.forward(&head_a)[0];
        cache.concat = concat;
        cache.head_pre = head_pre;
        cache.head_a = head_a;
        Ok(cache)
    }

    /// Accumulates `d_out * d(prediction)/d(theta)` into `grad`.
    fn backward_cached(&self, cache: &Cache, d_out: f64, grad: &mut RegressorParams) {
        let slope = self.arch.leaky_slope;
        let hd = self.arch.lstm_hidden;

        let mut d_head_a = vec![0.0; self.arch.head_hidden];
        self.head2.backward(&cache.head_a, &[d_out], &mut grad.head2, Some(&mut d_head_a));
        let d_head_pre: Vec<f64> =
            d_head_a.iter().zip(&cache.head_pre).map(|(g, &z)| g * leaky_relu_grad(z, slope)).collect();
        let mut d_concat = vec![0.0; cache.concat.len()];
        self.head1.backward(&cache.concat, &d_head_pre, &mut grad.head1, Some(&mut d_concat));

        let mut dh = vec![0.0; hd];
        let mut dc = vec![0.0; hd];
        let mut dx = vec![0.0; self.arch.action_embed];
        for t in (0..cache.lstm.len()).rev() {
            for (a, b) in dh.iter_mut().zip(&d_concat[t * hd..(t + 1) * hd]) {
                *a += b;
            }
            dx.fill(0.0);
            self.lstm.backward_step(&cache.lstm[t], &mut dh, &mut dc, &mut grad.lstm, &mut dx);

            let ac = &cache.actions[t];
            let d_pre2: Vec<f64> = dx.iter().zip(&ac.pre2).map(|(g, &z)| g * leaky_relu_grad(z, slope)).collect();
            let mut d_a1 = vec![0.0; self.arch.action_hidden];
            self.action2.backward(&ac.a1, &d_pre2, &mut grad.action2, Some(&mut d_a1));
            let d_pre1: Vec<f64> = d_a1.iter().zip(&ac.pre1).map(|(g, &z)| g * leaky_relu_grad(z, slope)).collect();
            self.action1.backward(&ac.input, &d_pre1, &mut grad.action1, None);
        }

        let mut d_embed = vec![0.0; cache.embed.len()];
        self.init_h.backward(&cache.embed, &dh, &mut grad.init_h, Some(&mut d_embed));
        self.init_c.backward(&cache.embed, &dc, &mut grad.init_c, Some(&mut d_embed));

        let mut d_post = d_embed;
        for (l, cc) in cache.conv.iter().enumerate().rev() {
            let d_pre: Vec<f64> = d_post.iter().zip(&cc.pre).map(|(g, &z)| g * leaky_relu_grad(z, slope)).collect();
            if l == 0 {
                self.conv[l].backward(&cc.input, cc.h, cc.w, &d_pre, &mut grad.conv[l], None);
            } else {
                let mut d_in = vec![0.0; cc.input.len()];
                self.conv[l].backward(&cc.input, cc.h, cc.w, &d_pre, &mut grad.conv[l], Some(&mut d_in));
                d_post = d_in;
            }
        }
    }
}

/// Recurrent state initialised from the image prong.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEncoding {
    pub h0: Vec<f64>,
    pub c0: Vec<f64>,
}

#[derive(Default)]
struct ConvCache {
    input: Vec<f64>,
    h: usize,
    w: usize,
    pre: Vec<f64>,
}

#[derive(Default)]
struct ActionCache {
    input: [f64; 2],
    pre1: Vec<f64>,
    a1: Vec<f64>,
    pre2: Vec<f64>,
}

#[derive(Default)]
struct Cache {
    conv: Vec<ConvCache>,
    embed: Vec<f64>,
    actions: Vec<ActionCache>,
    lstm: Vec<LstmStep>,
    concat: Vec<f64>,
    head_pre: Vec<f64>,
    head_a: Vec<f64>,
    output: f64,
}

/// Mean squared error over a batch.
pub fn loss(params: &RegressorParams, batch: &[&ErrorSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::config("batch", "must not be empty"));
    }
    let mut sum = 0.0;
    for s in batch {
        let r = s.tau - params.forward(&s.history, &s.actions)?;
        sum += r * r;
    }
    Ok(sum / batch.len() as f64)
}

/// Loss and its exact gradient w.r.t. every parameter tensor.
pub fn backward(params: &RegressorParams, batch: &[&ErrorSample]) -> Result<(f64, RegressorParams)> {
    if batch.is_empty() {
        return Err(Error::config("batch", "must not be empty"));
    }
    let n = batch.len() as f64;
    let mut grad = params.zeros_like();
    let mut sum = 0.0;
    for s in batch {
        let cache = params.forward_cached(&s.history, &s.actions)?;
        let r = s.tau - cache.output;
        sum += r * r;
        params.backward_cached(&cache, -2.0 * r / n, &mut grad);
    }
    Ok((sum / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Control, State};
    use crate::labeling::Provenance;
    use crate::terrain::EgoObservation;
    use rand::Rng;
    use std::sync::Arc;

    pub(crate) fn tiny_arch() -> ArchConfig {
        ArchConfig {
            obs_height: 8,
            obs_width: 8,
            horizon: 3,
            conv_channels: vec![2, 3, 4],
            action_hidden: 4,
            action_embed: 3,
            lstm_hidden: 4,
            head_hidden: 5,
            ..Default::default()
        }
    }

    fn random_sample(arch: &ArchConfig, rng: &mut ChaCha8Rng) -> ErrorSample {
        let images = (0..arch.history_len)
            .map(|_| {
                let n = arch.obs_channels * arch.obs_height * arch.obs_width;
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
                (0..arch.horizon).map(|_| Control::new(rng.random_range(0.0..0.8), rng.random_range(-1.5..1.5))).collect(),
            ),
            tau: rng.random_range(0.0..1.5),
            start_state: State::default(),
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn default_shapes_produce_one_scalar() {
        let arch = ArchConfig::default();
        assert_eq!(arch.embed_len(), 32 * 4 * 4);
        let p = RegressorParams::init(&arch, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_sample(&arch, &mut rng);
        let y = p.forward(&s.history, &s.actions).unwrap();
        assert!(y.is_finite());
        assert_eq!(y.to_bits(), p.forward(&s.history, &s.actions).unwrap().to_bits());
    }

    #[test]
    fn zero_network_outputs_final_bias() {
        let arch = tiny_arch();
        let mut p = RegressorParams::zeros(&arch);
        p.head2.bias.data[0] = 0.7;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_sample(&arch, &mut rng);
        assert_eq!(p.forward(&s.history, &s.actions).unwrap(), 0.7);
    }

    #[test]
    fn shape_mismatch_names_the_tensor() {
        let arch = tiny_arch();
        let p = RegressorParams::init(&arch, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = random_sample(&arch, &mut rng);
        s.actions.controls.pop();
        match p.forward(&s.history, &s.actions) {
            Err(Error::ShapeMismatch { name, .. }) => assert_eq!(name, "actions"),
            other => panic!("{other:?}"),
        }
        let mut s = random_sample(&arch, &mut rng);
        s.history.images.pop();
        assert!(matches!(p.forward(&s.history, &s.actions), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn loss_matches_two_pass_mean() {
        let arch = tiny_arch();
        let p = RegressorParams::init(&arch, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let batch: Vec<ErrorSample> = (0..9).map(|_| random_sample(&arch, &mut rng)).collect();
        let refs: Vec<&ErrorSample> = batch.iter().collect();
        let preds: Vec<f64> = batch.iter().map(|s| p.forward(&s.history, &s.actions).unwrap()).collect();
        let sq: Vec<f64> = batch.iter().zip(&preds).map(|(s, y)| (s.tau - y).powi(2)).collect();
        let naive = sq.iter().sum::<f64>() / sq.len() as f64;
        let l = loss(&p, &refs).unwrap();
        assert!((l - naive).abs() <= 1e-10 * naive.abs());
    }

    #[test]
    fn unit_residual_loss() {
        let arch = tiny_arch();
        let p = RegressorParams::zeros(&arch);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = random_sample(&arch, &mut rng);
        s.tau = 1.0;
        assert_eq!(loss(&p, &[&s]).unwrap(), 1.0);
        s.tau = 0.0;
        assert_eq!(loss(&p, &[&s]).unwrap(), 0.0);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let arch = tiny_arch();
        let p = RegressorParams::init(&arch, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut batch: Vec<ErrorSample> = (0..4).map(|_| random_sample(&arch, &mut rng)).collect();
        for s in &mut batch {
            s.tau = p.forward(&s.history, &s.actions).unwrap();
        }
        let refs: Vec<&ErrorSample> = batch.iter().collect();
        let (l, g) = backward(&p, &refs).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.tensors().iter().all(|(_, t)| t.data.iter().all(|v| v.abs() <= 1e-12)));
    }

    #[test]
    fn duplicated_sample_leaves_gradient_unchanged() {
        let arch = tiny_arch();
        let p = RegressorParams::init(&arch, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_sample(&arch, &mut rng);
        let (_, g1) = backward(&p, &[&s]).unwrap();
        let (_, g2) = backward(&p, &[&s, &s]).unwrap();
        for ((_, a), (_, b)) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn encoded_and_direct_forward_agree() {
        let arch = tiny_arch();
        let p = RegressorParams::init(&arch, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_sample(&arch, &mut rng);
        let cache = p.forward_cached(&s.history, &s.actions).unwrap();
        assert_eq!(cache.output.to_bits(), p.forward(&s.history, &s.actions).unwrap().to_bits());
    }

    #[test]
    fn tensor_names_are_unique_and_shapes_match() {
        let p = RegressorParams::init(&ArchConfig::default(), 0).unwrap();
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        let mut dedup = names.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
        assert_eq!(p.head1.weight.shape, vec![64, 20 * 64]);
        assert_eq!(p.conv[0].weight.shape, vec![8, 6, 3, 3]);
    }
}
