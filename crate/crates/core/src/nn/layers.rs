//! Layers with explicit forward and backward passes.
//!
//! Training-phase forwards cache what their backward pass needs; inference
//! forwards take `&self` and touch no state. Backward passes accumulate
//! parameter gradients into the parameter tensors and return the gradient
//! with respect to the layer input.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gemm::gemm;
use super::Tensor;
use crate::error::{Error, Result};

/// Train or inference behaviour for batch norm and dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Infer,
}

fn missing_cache(layer: &str) -> Error {
    Error::Validation(format!("{layer}: backward called without a training forward"))
}

/// Kernel of a 1D convolution with "same" zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dParams {
    /// Shape `(out_channels, in_channels, L)`, `L` odd.
    pub kernel: Tensor,
    pub stride: usize,
}

impl Conv1dParams {
    pub fn new(kernel: Tensor, stride: usize) -> Result<Self> {
        kernel.expect_rank(3, "conv1d kernel")?;
        let l = kernel.shape()[2];
        if l % 2 == 0 {
            return Err(Error::Config(format!("conv1d kernel length {l} must be odd")));
        }
        if stride == 0 {
            return Err(Error::Config("conv1d stride must be positive".into()));
        }
        Ok(Self { kernel, stride })
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        input_len.div_ceil(self.stride)
    }
}

struct ConvCache {
    batch: usize,
    in_len: usize,
    cols: Vec<f32>,
}

/// Strided 1D convolution, `V(x, t) = Σ_s Σ_j K(t, s, j)·U(x·stride + j − h, s)`
/// with half-width `h = (L − 1)/2` and zeros outside the input.
pub struct Conv1d {
    pub params: Conv1dParams,
    cache: Option<ConvCache>,
}

impl Conv1d {
    pub fn new(params: Conv1dParams) -> Self {
        Self {
            params,
            cache: None,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize)> {
        x.expect_rank(3, "conv1d input")?;
        let s = x.shape()[1];
        if s != self.params.in_channels() {
            return Err(Error::Dimension(format!(
                "conv1d expects {} input channels, got {s}",
                self.params.in_channels()
            )));
        }
        Ok((x.shape()[0], x.shape()[2]))
    }

    /// Unfolds the batch `(B, S, T)` into a `(S·L, B·T_out)` column matrix;
    /// column `b·T_out + o` holds the receptive field of output `o` of
    /// sample `b`.
    fn im2col(&self, x: &[f32], batch: usize, in_len: usize, cols: &mut [f32]) {
        let s_ch = self.params.in_channels();
        let l = self.params.kernel_len();
        let h = (l - 1) / 2;
        let stride = self.params.stride;
        let t_out = self.params.output_len(in_len);
        let width = batch * t_out;
        for s in 0..s_ch {
            for j in 0..l {
                let row = &mut cols[(s * l + j) * width..(s * l + j + 1) * width];
                for b in 0..batch {
                    let src = &x[(b * s_ch + s) * in_len..(b * s_ch + s + 1) * in_len];
                    let dst = &mut row[b * t_out..(b + 1) * t_out];
                    for (o, d) in dst.iter_mut().enumerate() {
                        let i = (o * stride + j) as isize - h as isize;
                        *d = if i >= 0 && (i as usize) < in_len {
                            src[i as usize]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }

    fn col2im(&self, dcols: &[f32], batch: usize, in_len: usize, dx: &mut [f32]) {
        let s_ch = self.params.in_channels();
        let l = self.params.kernel_len();
        let h = (l - 1) / 2;
        let stride = self.params.stride;
        let t_out = self.params.output_len(in_len);
        let width = batch * t_out;
        for s in 0..s_ch {
            for j in 0..l {
                let row = &dcols[(s * l + j) * width..(s * l + j + 1) * width];
                for b in 0..batch {
                    let dst = &mut dx[(b * s_ch + s) * in_len..(b * s_ch + s + 1) * in_len];
                    for (o, &g) in row[b * t_out..(b + 1) * t_out].iter().enumerate() {
                        let i = (o * stride + j) as isize - h as isize;
                        if i >= 0 && (i as usize) < in_len {
                            dst[i as usize] += g;
                        }
                    }
                }
            }
        }
    }

    fn run(&self, x: &Tensor) -> Result<(Tensor, Vec<f32>)> {
        let (batch, in_len) = self.check_input(x)?;
        let o_ch = self.params.out_channels();
        let sl = self.params.in_channels() * self.params.kernel_len();
        let t_out = self.params.output_len(in_len);
        let width = batch * t_out;

        let mut cols = vec![0.0; sl * width];
        self.im2col(x.data(), batch, in_len, &mut cols);
        let mut flat = vec![0.0; o_ch * width];
        gemm(o_ch, sl, width, 1.0, self.params.kernel.data(), false, &cols, false, 0.0, &mut flat);

        // (O, B·T_out) -> (B, O, T_out)
        let mut out = Tensor::zeros(&[batch, o_ch, t_out]);
        let od = out.data_mut();
        for o in 0..o_ch {
            for b in 0..batch {
                od[(b * o_ch + o) * t_out..(b * o_ch + o + 1) * t_out]
                    .copy_from_slice(&flat[o * width + b * t_out..o * width + (b + 1) * t_out]);
            }
        }
        Ok((out, cols))
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let (out, cols) = self.run(x)?;
        self.cache = Some(ConvCache {
            batch: x.shape()[0],
            in_len: x.shape()[2],
            cols,
        });
        Ok(out)
    }

    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x)?.0)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or_else(|| missing_cache("conv1d"))?;
        let (batch, in_len) = (cache.batch, cache.in_len);
        let o_ch = self.params.out_channels();
        let s_ch = self.params.in_channels();
        let sl = s_ch * self.params.kernel_len();
        let t_out = self.params.output_len(in_len);
        let width = batch * t_out;
        if dy.shape() != [batch, o_ch, t_out] {
            let want = [batch, o_ch, t_out];
            self.cache = Some(cache);
            return Err(Error::Dimension(format!(
                "conv1d backward expects {want:?}, got {:?}",
                dy.shape()
            )));
        }

        let mut g = vec![0.0; o_ch * width];
        for o in 0..o_ch {
            for b in 0..batch {
                g[o * width + b * t_out..o * width + (b + 1) * t_out]
                    .copy_from_slice(&dy.data()[(b * o_ch + o) * t_out..(b * o_ch + o + 1) * t_out]);
            }
        }
        let (kernel, kgrad) = self.params.kernel.data_and_grad_mut();
        // dK += dY · colsᵀ
        gemm(o_ch, width, sl, 1.0, &g, false, &cache.cols, true, 1.0, kgrad);
        // dcols = Kᵀ · dY
        let mut dcols = vec![0.0; sl * width];
        gemm(sl, o_ch, width, 1.0, kernel, true, &g, false, 0.0, &mut dcols);
        let mut dx = Tensor::zeros(&[batch, s_ch, in_len]);
        self.col2im(&dcols, batch, in_len, dx.data_mut());
        self.cache = Some(cache);
        Ok(dx)
    }
}

/// Per-channel batch normalization over batch and time.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
    /// Weight kept by the running statistics on each update.
    pub momentum: f32,
}

impl BatchNormParams {
    /// `γ = 1`, `β = 0`, running mean 0 and variance 1.
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: 1e-5,
            momentum: 0.9,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

struct BnCache {
    shape: Vec<usize>,
    xhat: Vec<f32>,
    inv_std: Vec<f32>,
}

pub struct BatchNorm1d {
    pub params: BatchNormParams,
    cache: Option<BnCache>,
}

impl BatchNorm1d {
    pub fn new(params: BatchNormParams) -> Self {
        Self {
            params,
            cache: None,
        }
    }

    fn dims(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        x.expect_rank(3, "batchnorm1d input")?;
        let (b, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if c != self.params.channels() {
            return Err(Error::Dimension(format!(
                "batchnorm1d has {} channels, input has {c}",
                self.params.channels()
            )));
        }
        Ok((b, c, t))
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let (batch, ch, len) = self.dims(x)?;
        let n = batch * len;
        if n < 2 {
            return Err(Error::Statistics(format!(
                "batch norm needs at least 2 values per channel in training, got {n}"
            )));
        }
        let xd = x.data();
        let mut out = Tensor::zeros(x.shape());
        let mut xhat = vec![0.0f32; xd.len()];
        let mut inv_std = vec![0.0f32; ch];
        let p = &mut self.params;
        for c in 0..ch {
            let mut sum = 0.0f64;
            for b in 0..batch {
                let row = &xd[(b * ch + c) * len..(b * ch + c + 1) * len];
                sum += row.iter().map(|&v| v as f64).sum::<f64>();
            }
            let mean = sum / n as f64;
            let mut sq = 0.0f64;
            for b in 0..batch {
                let row = &xd[(b * ch + c) * len..(b * ch + c + 1) * len];
                sq += row.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>();
            }
            let var = sq / n as f64;
            let istd = 1.0 / (var + p.epsilon as f64).sqrt();
            inv_std[c] = istd as f32;
            let (g, bt) = (p.gamma.data()[c], p.beta.data()[c]);
            let (mean32, istd32) = (mean as f32, istd as f32);
            for b in 0..batch {
                let off = (b * ch + c) * len;
                for t in 0..len {
                    let h = (xd[off + t] - mean32) * istd32;
                    xhat[off + t] = h;
                    out.data_mut()[off + t] = g * h + bt;
                }
            }
            let unbiased = var * n as f64 / (n - 1) as f64;
            let mom = p.momentum;
            p.running_mean[c] = mom * p.running_mean[c] + (1.0 - mom) * mean as f32;
            p.running_var[c] = mom * p.running_var[c] + (1.0 - mom) * unbiased as f32;
        }
        self.cache = Some(BnCache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
        });
        Ok(out)
    }

    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        let (batch, ch, len) = self.dims(x)?;
        let p = &self.params;
        let mut out = x.clone();
        for c in 0..ch {
            let istd = 1.0 / (p.running_var[c] + p.epsilon).sqrt();
            let scale = p.gamma.data()[c] * istd;
            let shift = p.beta.data()[c] - p.running_mean[c] * scale;
            for b in 0..batch {
                let off = (b * ch + c) * len;
                for v in &mut out.data_mut()[off..off + len] {
                    *v = *v * scale + shift;
                }
            }
        }
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let cache = self.cache.take().ok_or_else(|| missing_cache("batchnorm1d"))?;
        if dy.shape() != cache.shape.as_slice() {
            return Err(Error::Dimension("batchnorm1d backward shape mismatch".into()));
        }
        let (batch, ch, len) = (cache.shape[0], cache.shape[1], cache.shape[2]);
        let n = (batch * len) as f32;
        let g = dy.data();
        let mut dx = Tensor::zeros(&cache.shape);
        for c in 0..ch {
            let mut dbeta = 0.0f64;
            let mut dgamma = 0.0f64;
            for b in 0..batch {
                let off = (b * ch + c) * len;
                for t in 0..len {
                    dbeta += g[off + t] as f64;
                    dgamma += (g[off + t] * cache.xhat[off + t]) as f64;
                }
            }
            self.params.gamma.grad_mut()[c] += dgamma as f32;
            self.params.beta.grad_mut()[c] += dbeta as f32;
            let k = self.params.gamma.data()[c] * cache.inv_std[c] / n;
            let (db, dg) = (dbeta as f32, dgamma as f32);
            for b in 0..batch {
                let off = (b * ch + c) * len;
                for t in 0..len {
                    dx.data_mut()[off + t] = k * (n * g[off + t] - db - cache.xhat[off + t] * dg);
                }
            }
        }
        self.cache = Some(cache);
        Ok(dx)
    }
}

/// Dropout settings; `keep_prob` is the probability an element survives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutConfig {
    pub keep_prob: f32,
    pub seed: u64,
}

impl Default for DropoutConfig {
    fn default() -> Self {
        Self {
            keep_prob: 0.5,
            seed: 0,
        }
    }
}

/// Inverted dropout: training scales survivors by `1/keep_prob`, inference
/// is the identity.
pub struct Dropout {
    pub cfg: DropoutConfig,
    mask: Option<Vec<f32>>,
}

impl Dropout {
    pub fn new(cfg: DropoutConfig) -> Result<Self> {
        if !(cfg.keep_prob > 0.0 && cfg.keep_prob <= 1.0) {
            return Err(Error::Config(format!(
                "dropout keep probability {} not in (0, 1]",
                cfg.keep_prob
            )));
        }
        Ok(Self { cfg, mask: None })
    }

    /// Masks drawn from a generator seeded with `cfg.seed`; change the seed
    /// between steps for fresh masks.
    pub fn forward_train(&mut self, x: &Tensor) -> Tensor {
        let keep = self.cfg.keep_prob;
        let mask: Vec<f32> = if keep >= 1.0 {
            vec![1.0; x.len()]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
            (0..x.len())
                .map(|_| {
                    if rng.random::<f32>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let mut out = x.clone();
        for (v, m) in out.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        self.mask = Some(mask);
        out
    }

    pub fn forward_infer(&self, x: &Tensor) -> Tensor {
        x.clone()
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let mask = self.mask.as_ref().ok_or_else(|| missing_cache("dropout"))?;
        if mask.len() != dy.len() {
            return Err(Error::Dimension("dropout backward shape mismatch".into()));
        }
        let mut dx = dy.clone();
        for (g, m) in dx.data_mut().iter_mut().zip(mask) {
            *g *= m;
        }
        Ok(dx)
    }
}

/// `max(0, x)`; the gradient at exactly 0 is 0.
#[derive(Default)]
pub struct Relu {
    active: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Tensor {
        let out = relu(x);
        self.active = Some(x.data().iter().map(|&v| v > 0.0).collect());
        out
    }

    pub fn forward_infer(&self, x: &Tensor) -> Tensor {
        relu(x)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let active = self.active.as_ref().ok_or_else(|| missing_cache("relu"))?;
        if active.len() != dy.len() {
            return Err(Error::Dimension("relu backward shape mismatch".into()));
        }
        let mut dx = dy.clone();
        for (g, &a) in dx.data_mut().iter_mut().zip(active) {
            if !a {
                *g = 0.0;
            }
        }
        Ok(dx)
    }
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = v.max(0.0);
    }
    out
}

/// Fully connected layer `y = x·W + b` with `W` of shape `(in, out)`.
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        weights.expect_rank(2, "dense weights")?;
        if bias.len() != weights.shape()[1] {
            return Err(Error::Dimension(format!(
                "dense bias has {} entries for {} outputs",
                bias.len(),
                weights.shape()[1]
            )));
        }
        Ok(Self {
            weights,
            bias,
            input: None,
        })
    }

    pub fn in_features(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        x.expect_rank(2, "dense input")?;
        let (batch, fin) = (x.shape()[0], x.shape()[1]);
        if fin != self.in_features() {
            return Err(Error::Dimension(format!(
                "dense expects {} features, got {fin}",
                self.in_features()
            )));
        }
        let fout = self.out_features();
        let mut out = Tensor::zeros(&[batch, fout]);
        for row in out.data_mut().chunks_mut(fout) {
            row.copy_from_slice(self.bias.data());
        }
        gemm(
            batch,
            fin,
            fout,
            1.0,
            x.data(),
            false,
            self.weights.data(),
            false,
            1.0,
            out.data_mut(),
        );
        Ok(out)
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let out = self.forward_infer(x)?;
        self.input = Some(x.clone());
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let x = self.input.take().ok_or_else(|| missing_cache("dense"))?;
        let (batch, fin, fout) = (x.shape()[0], self.in_features(), self.out_features());
        if dy.shape() != [batch, fout] {
            return Err(Error::Dimension("dense backward shape mismatch".into()));
        }
        gemm(
            fin,
            batch,
            fout,
            1.0,
            x.data(),
            true,
            dy.data(),
            false,
            1.0,
            self.weights.grad_mut(),
        );
        let bgrad = self.bias.grad_mut();
        for row in dy.data().chunks(fout) {
            for (g, &d) in bgrad.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut dx = Tensor::zeros(&[batch, fin]);
        gemm(
            batch,
            fout,
            fin,
            1.0,
            dy.data(),
            false,
            self.weights.data(),
            true,
            0.0,
            dx.data_mut(),
        );
        self.input = Some(x);
        Ok(dx)
    }
}
