//! The three layer kinds the regressor needs, each with an explicit backward
//! pass. Gradients are accumulated (`+=`) into a layer of the same shape.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: (0..n).map(|_| rng.random_range(-bound..=bound)).collect() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer, `weight` is `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Tensor::zeros(&[outputs, inputs]), bias: Tensor::zeros(&[outputs]) }
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let b = 1.0 / (inputs as f64).sqrt();
        Self { weight: Tensor::uniform(&[outputs, inputs], b, rng), bias: Tensor::uniform(&[outputs], b, rng) }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        let n_in = self.inputs();
        for (o, out) in y.iter_mut().enumerate() {
            let row = &self.weight.data[o * n_in..(o + 1) * n_in];
            let mut acc = self.bias.data[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *out = acc;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.outputs()];
        self.forward_into(x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grad` and adds `W^T dy` to `dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut [f64]>) {
        let n_in = self.inputs();
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias.data[o] += g;
            let row = &mut grad.weight.data[o * n_in..(o + 1) * n_in];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += g * xi;
            }
        }
        if let Some(dx) = dx {
            for (o, &g) in dy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.weight.data[o * n_in..(o + 1) * n_in];
                for (d, w) in dx.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        }
    }
}

/// 3x3 convolution with stride 2 and zero padding 1. `weight` is
/// `[out, in, 3, 3]`; activations are `[channels, height, width]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
}

pub const KERNEL: usize = 3;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;

pub fn conv_out_size(n: usize) -> usize {
    (n + 2 * PAD - KERNEL) / STRIDE + 1
}

impl Conv2d {
    pub fn zeros(cin: usize, cout: usize) -> Self {
        Self { weight: Tensor::zeros(&[cout, cin, KERNEL, KERNEL]), bias: Tensor::zeros(&[cout]) }
    }

    pub fn init<R: Rng + ?Sized>(cin: usize, cout: usize, rng: &mut R) -> Self {
        let b = 1.0 / ((cin * KERNEL * KERNEL) as f64).sqrt();
        Self {
            weight: Tensor::uniform(&[cout, cin, KERNEL, KERNEL], b, rng),
            bias: Tensor::uniform(&[cout], b, rng),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    // Valid output index range for a kernel tap, so the inner loops skip
    // padding without branching.
    fn tap_range(k: usize, n_in: usize, n_out: usize) -> (usize, usize) {
        // input index = STRIDE * o + k - PAD must lie in [0, n_in)
        let lo = if k >= PAD { 0 } else { (PAD - k).div_ceil(STRIDE) };
        let hi = n_out.min((n_in + PAD - k).div_ceil(STRIDE));
        (lo, hi.max(lo))
    }

    pub fn forward(&self, x: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
        let (cin, cout) = (self.in_channels(), self.out_channels());
        let (oh, ow) = (conv_out_size(h), conv_out_size(w));
        let mut y = vec![0.0; cout * oh * ow];
        for co in 0..cout {
            let plane = &mut y[co * oh * ow..(co + 1) * oh * ow];
            plane.fill(self.bias.data[co]);
            for ci in 0..cin {
                let xin = &x[ci * h * w..(ci + 1) * h * w];
                for ky in 0..KERNEL {
                    let (ylo, yhi) = Self::tap_range(ky, h, oh);
                    for kx in 0..KERNEL {
                        let wv = self.weight.data[((co * cin + ci) * KERNEL + ky) * KERNEL + kx];
                        let (xlo, xhi) = Self::tap_range(kx, w, ow);
                        for oy in ylo..yhi {
                            let iy = STRIDE * oy + ky - PAD;
                            let row_in = &xin[iy * w..(iy + 1) * w];
                            let row_out = &mut plane[oy * ow..(oy + 1) * ow];
                            for ox in xlo..xhi {
                                row_out[ox] += wv * row_in[STRIDE * ox + kx - PAD];
                            }
                        }
                    }
                }
            }
        }
        (y, oh, ow)
    }

    pub fn backward(&self, x: &[f64], h: usize, w: usize, dy: &[f64], grad: &mut Conv2d, dx: Option<&mut [f64]>) {
        let (cin, cout) = (self.in_channels(), self.out_channels());
        let (oh, ow) = (conv_out_size(h), conv_out_size(w));
        let mut dx = dx;
        for co in 0..cout {
            let dplane = &dy[co * oh * ow..(co + 1) * oh * ow];
            grad.bias.data[co] += dplane.iter().sum::<f64>();
            for ci in 0..cin {
                let xin = &x[ci * h * w..(ci + 1) * h * w];
                for ky in 0..KERNEL {
                    let (ylo, yhi) = Self::tap_range(ky, h, oh);
                    for kx in 0..KERNEL {
                        let widx = ((co * cin + ci) * KERNEL + ky) * KERNEL + kx;
                        let wv = self.weight.data[widx];
                        let (xlo, xhi) = Self::tap_range(kx, w, ow);
                        let mut gw = 0.0;
                        for oy in ylo..yhi {
                            let iy = STRIDE * oy + ky - PAD;
                            for ox in xlo..xhi {
                                let ix = STRIDE * ox + kx - PAD;
                                let g = dplane[oy * ow + ox];
                                gw += g * xin[iy * w + ix];
                                if let Some(dx) = dx.as_deref_mut() {
                                    dx[(ci * h + iy) * w + ix] += g * wv;
                                }
                            }
                        }
                        grad.weight.data[widx] += gw;
                    }
                }
            }
        }
    }
}

/// LSTM cell with gates stacked `[input, forget, cell, output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub bias: Tensor,
}

/// Activations of one LSTM step kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmStep {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl LstmCell {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * hidden, inputs]),
            w_hh: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn init<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let b = 1.0 / (hidden as f64).sqrt();
        Self {
            w_ih: Tensor::uniform(&[4 * hidden, inputs], b, rng),
            w_hh: Tensor::uniform(&[4 * hidden, hidden], b, rng),
            bias: Tensor::uniform(&[4 * hidden], b, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.shape[1]
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.shape[1]
    }

    fn gates(&self, x: &[f64], h_prev: &[f64], out: &mut [f64]) {
        let (n_in, hd) = (self.inputs(), self.hidden());
        for (r, z) in out.iter_mut().enumerate() {
            let mut acc = self.bias.data[r];
            let wi = &self.w_ih.data[r * n_in..(r + 1) * n_in];
            for (w, v) in wi.iter().zip(x) {
                acc += w * v;
            }
            let wh = &self.w_hh.data[r * hd..(r + 1) * hd];
            for (w, v) in wh.iter().zip(h_prev) {
                acc += w * v;
            }
            *z = acc;
        }
    }

    /// One step without caching; updates `h` and `c` in place.
    pub fn step(&self, x: &[f64], h: &mut [f64], c: &mut [f64], scratch: &mut Vec<f64>) {
        let hd = self.hidden();
        scratch.resize(4 * hd, 0.0);
        self.gates(x, h, scratch);
        for j in 0..hd {
            let i = sigmoid(scratch[j]);
            let f = sigmoid(scratch[hd + j]);
            let g = scratch[2 * hd + j].tanh();
            let o = sigmoid(scratch[3 * hd + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
    }

    pub fn step_cached(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> LstmStep {
        let hd = self.hidden();
        let mut z = vec![0.0; 4 * hd];
        self.gates(x, h_prev, &mut z);
        let mut s = LstmStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i: vec![0.0; hd],
            f: vec![0.0; hd],
            g: vec![0.0; hd],
            o: vec![0.0; hd],
            tanh_c: vec![0.0; hd],
            c: vec![0.0; hd],
            h: vec![0.0; hd],
        };
        for j in 0..hd {
            s.i[j] = sigmoid(z[j]);
            s.f[j] = sigmoid(z[hd + j]);
            s.g[j] = z[2 * hd + j].tanh();
            s.o[j] = sigmoid(z[3 * hd + j]);
            s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.g[j];
            s.tanh_c[j] = s.c[j].tanh();
            s.h[j] = s.o[j] * s.tanh_c[j];
        }
        s
    }

    /// Backward through one step. `dh`/`dc` are the gradients w.r.t. this
    /// step's outputs; on return they hold the gradients w.r.t. `h_prev` and
    /// `c_prev`. The gradient w.r.t. `x` is added to `dx`.
    pub fn backward_step(&self, s: &LstmStep, dh: &mut [f64], dc: &mut [f64], grad: &mut LstmCell, dx: &mut [f64]) {
        let (n_in, hd) = (self.inputs(), self.hidden());
        let mut dz = vec![0.0; 4 * hd];
        for j in 0..hd {
            let d_o = dh[j] * s.tanh_c[j];
            let dcj = dc[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            let di = dcj * s.g[j];
            let dg = dcj * s.i[j];
            let df = dcj * s.c_prev[j];
            dc[j] = dcj * s.f[j];
            dz[j] = di * s.i[j] * (1.0 - s.i[j]);
            dz[hd + j] = df * s.f[j] * (1.0 - s.f[j]);
            dz[2 * hd + j] = dg * (1.0 - s.g[j] * s.g[j]);
            dz[3 * hd + j] = d_o * s.o[j] * (1.0 - s.o[j]);
        }
        dh.fill(0.0);
        for (r, &g) in dz.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias.data[r] += g;
            let gi = &mut grad.w_ih.data[r * n_in..(r + 1) * n_in];
            for (w, v) in gi.iter_mut().zip(&s.x) {
                *w += g * v;
            }
            let gh = &mut grad.w_hh.data[r * hd..(r + 1) * hd];
            for (w, v) in gh.iter_mut().zip(&s.h_prev) {
                *w += g * v;
            }
            let wi = &self.w_ih.data[r * n_in..(r + 1) * n_in];
            for (d, w) in dx.iter_mut().zip(wi) {
                *d += g * w;
            }
            let wh = &self.w_hh.data[r * hd..(r + 1) * hd];
            for (d, w) in dh.iter_mut().zip(wh) {
                *d += g * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    // Scalar objective: sum_k r_k * y_k for a fixed random projection r.
    fn project(y: &[f64], r: &[f64]) -> f64 {
        y.iter().zip(r).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn conv_matches_naive_and_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (cin, cout, h, w) = (2, 3, 7, 6);
        let conv = Conv2d::init(cin, cout, &mut rng);
        let x = random(cin * h * w, &mut rng);
        let (y, oh, ow) = conv.forward(&x, h, w);
        assert_eq!((oh, ow), (4, 3));

        // naive oracle with explicit bounds checks
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = conv.bias.data[co];
                    for ci in 0..cin {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let iy = (2 * oy + ky) as isize - 1;
                                let ix = (2 * ox + kx) as isize - 1;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                acc += conv.weight.data[((co * cin + ci) * 3 + ky) * 3 + kx]
                                    * x[(ci * h + iy as usize) * w + ix as usize];
                            }
                        }
                    }
                    assert!((acc - y[(co * oh + oy) * ow + ox]).abs() < 1e-12);
                }
            }
        }

        let r = random(y.len(), &mut rng);
        let mut grad = Conv2d::zeros(cin, cout);
        let mut dx = vec![0.0; x.len()];
        conv.backward(&x, h, w, &r, &mut grad, Some(&mut dx));
        let eps = 1e-5;
        for k in 0..conv.weight.len() {
            let mut p = conv.clone();
            p.weight.data[k] += eps;
            let up = project(&p.forward(&x, h, w).0, &r);
            p.weight.data[k] -= 2.0 * eps;
            let dn = project(&p.forward(&x, h, w).0, &r);
            assert!(rel_err((up - dn) / (2.0 * eps), grad.weight.data[k]) < 1e-6);
        }
        for k in 0..x.len() {
            let mut xp = x.clone();
            xp[k] += eps;
            let up = project(&conv.forward(&xp, h, w).0, &r);
            xp[k] -= 2.0 * eps;
            let dn = project(&conv.forward(&xp, h, w).0, &r);
            assert!(rel_err((up - dn) / (2.0 * eps), dx[k]) < 1e-6);
        }
    }

    #[test]
    fn dense_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = Dense::init(5, 4, &mut rng);
        let x = random(5, &mut rng);
        let r = random(4, &mut rng);
        let mut grad = Dense::zeros(5, 4);
        let mut dx = vec![0.0; 5];
        d.backward(&x, &r, &mut grad, Some(&mut dx));
        let eps = 1e-5;
        for k in 0..d.weight.len() {
            let mut p = d.clone();
            p.weight.data[k] += eps;
            let up = project(&p.forward(&x), &r);
            p.weight.data[k] -= 2.0 * eps;
            let dn = project(&p.forward(&x), &r);
            assert!(rel_err((up - dn) / (2.0 * eps), grad.weight.data[k]) < 1e-6);
        }
        for k in 0..5 {
            let mut xp = x.clone();
            xp[k] += eps;
            let up = project(&d.forward(&xp), &r);
            xp[k] -= 2.0 * eps;
            let dn = project(&d.forward(&xp), &r);
            assert!(rel_err((up - dn) / (2.0 * eps), dx[k]) < 1e-6);
        }
    }

    #[test]
    fn lstm_step_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cell = LstmCell::init(3, 4, &mut rng);
        let x = random(3, &mut rng);
        let h0 = random(4, &mut rng);
        let c0 = random(4, &mut rng);
        let (rh, rc) = (random(4, &mut rng), random(4, &mut rng));
        let objective = |cell: &LstmCell, x: &[f64], h0: &[f64], c0: &[f64]| {
            let s = cell.step_cached(x, h0, c0);
            project(&s.h, &rh) + project(&s.c, &rc)
        };
        let s = cell.step_cached(&x, &h0, &c0);
        let mut grad = LstmCell::zeros(3, 4);
        let (mut dh, mut dc) = (rh.clone(), rc.clone());
        let mut dx = vec![0.0; 3];
        cell.backward_step(&s, &mut dh, &mut dc, &mut grad, &mut dx);
        let eps = 1e-5;
        let fd = |f: &dyn Fn(f64) -> f64| (f(eps) - f(-eps)) / (2.0 * eps);
        for k in 0..cell.w_ih.len() {
            let g = fd(&|e| {
                let mut p = cell.clone();
                p.w_ih.data[k] += e;
                objective(&p, &x, &h0, &c0)
            });
            assert!(rel_err(g, grad.w_ih.data[k]) < 1e-6);
        }
        for k in 0..cell.w_hh.len() {
            let g = fd(&|e| {
                let mut p = cell.clone();
                p.w_hh.data[k] += e;
                objective(&p, &x, &h0, &c0)
            });
            assert!(rel_err(g, grad.w_hh.data[k]) < 1e-6);
        }
        for k in 0..4 {
            let g = fd(&|e| {
                let mut hp = h0.clone();
                hp[k] += e;
                objective(&cell, &x, &hp, &c0)
            });
            assert!(rel_err(g, dh[k]) < 1e-6);
            let g = fd(&|e| {
                let mut cp = c0.clone();
                cp[k] += e;
                objective(&cell, &x, &h0, &cp)
            });
            assert!(rel_err(g, dc[k]) < 1e-6);
        }
        for k in 0..3 {
            let g = fd(&|e| {
                let mut xp = x.clone();
                xp[k] += e;
                objective(&cell, &xp, &h0, &c0)
            });
            assert!(rel_err(g, dx[k]) < 1e-6);
        }
    }

    #[test]
    fn cached_and_plain_steps_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cell = LstmCell::init(3, 5, &mut rng);
        let x = random(3, &mut rng);
        let (mut h, mut c) = (random(5, &mut rng), random(5, &mut rng));
        let s = cell.step_cached(&x, &h, &c);
        let mut scratch = Vec::new();
        cell.step(&x, &mut h, &mut c, &mut scratch);
        assert_eq!(h, s.h);
        assert_eq!(c, s.c);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
