use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ConvSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::{
    softmax, BatchNorm1d, BatchNormParams, Conv1d, Conv1dParams, Dense, Dropout, DropoutConfig,
    Relu, Tensor,
};
use crate::signal::MultichannelFrame;

fn he_tensor(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let n = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(rng) as f32).collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

fn conv_layer(in_ch: usize, spec: &ConvSpec, rng: &mut ChaCha8Rng) -> Result<Conv1d> {
    let kernel = he_tensor(&[spec.filters, in_ch, spec.kernel], in_ch * spec.kernel, rng);
    Ok(Conv1d::new(Conv1dParams::new(kernel, spec.stride)?))
}

/// Convolution followed by batch norm.
pub struct ConvBn {
    pub conv: Conv1d,
    pub bn: BatchNorm1d,
}

impl ConvBn {
    fn new(in_ch: usize, spec: &ConvSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            conv: conv_layer(in_ch, spec, rng)?,
            bn: BatchNorm1d::new(BatchNormParams::new(spec.filters)),
        })
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let h = self.conv.forward_train(x)?;
        self.bn.forward_train(&h)
    }

    fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        self.bn.forward_infer(&self.conv.forward_infer(x)?)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let g = self.bn.backward(dy)?;
        self.conv.backward(&g)
    }

    fn params_mut(&mut self) -> [&mut Tensor; 3] {
        [
            &mut self.conv.params.kernel,
            &mut self.bn.params.gamma,
            &mut self.bn.params.beta,
        ]
    }
}

/// `relu(bn(conv(relu(bn(conv(x))))) + shortcut(x))`, where the shortcut is
/// the identity or, when the shape changes, a strided 1×1 convolution with
/// batch norm.
pub struct ResidualBlock {
    pub first: ConvBn,
    pub relu_mid: Relu,
    pub second: ConvBn,
    pub projection: Option<ConvBn>,
    pub relu_out: Relu,
}

impl ResidualBlock {
    pub fn new(in_ch: usize, spec: &ConvSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let first = ConvBn::new(in_ch, spec, rng)?;
        let second = ConvBn::new(spec.filters, &ConvSpec::new(spec.filters, spec.kernel, 1), rng)?;
        let projection = if spec.stride != 1 || in_ch != spec.filters {
            Some(ConvBn::new(in_ch, &ConvSpec::new(spec.filters, 1, spec.stride), rng)?)
        } else {
            None
        };
        Ok(Self {
            first,
            relu_mid: Relu::new(),
            second,
            projection,
            relu_out: Relu::new(),
        })
    }

    fn add(mut main: Tensor, shortcut: &Tensor) -> Result<Tensor> {
        if main.shape() != shortcut.shape() {
            return Err(Error::Dimension(format!(
                "residual paths differ: {:?} vs {:?}",
                main.shape(),
                shortcut.shape()
            )));
        }
        for (a, b) in main.data_mut().iter_mut().zip(shortcut.data()) {
            *a += b;
        }
        Ok(main)
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let h = self.first.forward_train(x)?;
        let h = self.relu_mid.forward_train(&h);
        let main = self.second.forward_train(&h)?;
        let short = match &mut self.projection {
            Some(p) => p.forward_train(x)?,
            None => x.clone(),
        };
        Ok(self.relu_out.forward_train(&Self::add(main, &short)?))
    }

    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        let h = crate::nn::relu(&self.first.forward_infer(x)?);
        let main = self.second.forward_infer(&h)?;
        let short = match &self.projection {
            Some(p) => p.forward_infer(x)?,
            None => x.clone(),
        };
        Ok(crate::nn::relu(&Self::add(main, &short)?))
    }

    /// Output of the shortcut path alone, in inference mode.
    pub fn shortcut_infer(&self, x: &Tensor) -> Result<Tensor> {
        match &self.projection {
            Some(p) => p.forward_infer(x),
            None => Ok(x.clone()),
        }
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let g = self.relu_out.backward(dy)?;
        let gm = self.second.backward(&g)?;
        let gm = self.relu_mid.backward(&gm)?;
        let mut dx = self.first.backward(&gm)?;
        let ds = match &mut self.projection {
            Some(p) => p.backward(&g)?,
            None => g,
        };
        for (a, b) in dx.data_mut().iter_mut().zip(ds.data()) {
            *a += b;
        }
        Ok(dx)
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        out.extend(self.first.params_mut());
        out.extend(self.second.params_mut());
        if let Some(p) = &mut self.projection {
            out.extend(p.params_mut());
        }
        out
    }
}

/// Frame classifier: conv stem, residual blocks, two dense layers.
pub struct Model {
    cfg: ModelConfig,
    pub stem: ConvBn,
    pub relu_stem: Relu,
    pub blocks: Vec<ResidualBlock>,
    pub fc1: Dense,
    pub relu_fc: Relu,
    pub dropout: Dropout,
    pub fc2: Dense,
}

impl Model {
    /// Builds the network with He-initialized weights drawn from `seed`.
    pub fn build(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stem = ConvBn::new(cfg.num_mics, &cfg.conv1, &mut rng)?;
        let mut ch = cfg.conv1.filters;
        let mut blocks = Vec::new();
        for spec in &cfg.residual_blocks {
            blocks.push(ResidualBlock::new(ch, spec, &mut rng)?);
            ch = spec.filters;
        }
        let flat = cfg.flat_features();
        let fc1 = Dense::new(
            he_tensor(&[flat, cfg.fc1_units], flat, &mut rng),
            Tensor::zeros(&[cfg.fc1_units]),
        )?;
        let fc2 = Dense::new(
            he_tensor(&[cfg.fc1_units, cfg.num_classes], cfg.fc1_units, &mut rng),
            Tensor::zeros(&[cfg.num_classes]),
        )?;
        Ok(Self {
            cfg: cfg.clone(),
            stem,
            relu_stem: Relu::new(),
            blocks,
            fc1,
            relu_fc: Relu::new(),
            dropout: Dropout::new(DropoutConfig {
                keep_prob: cfg.dropout_keep,
                seed: 0,
            })?,
            fc2,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let s = x.shape();
        if s.len() != 3 || s[1] != self.cfg.num_mics || s[2] != self.cfg.frame_len {
            return Err(Error::Dimension(format!(
                "model expects (batch, {}, {}) input, got {s:?}",
                self.cfg.num_mics, self.cfg.frame_len
            )));
        }
        Ok(())
    }

    /// Training-phase logits: batch statistics, dropout mask from
    /// `dropout_seed`, caches kept for [`Model::backward`].
    pub fn forward_train(&mut self, x: &Tensor, dropout_seed: u64) -> Result<Tensor> {
        self.check_input(x)?;
        let batch = x.shape()[0];
        let h = self.stem.forward_train(x)?;
        let mut h = self.relu_stem.forward_train(&h);
        for b in &mut self.blocks {
            h = b.forward_train(&h)?;
        }
        let h = h.reshape(&[batch, self.cfg.flat_features()])?;
        let h = self.fc1.forward_train(&h)?;
        let h = self.relu_fc.forward_train(&h);
        self.dropout.cfg.seed = dropout_seed;
        let h = self.dropout.forward_train(&h);
        self.fc2.forward_train(&h)
    }

    /// Inference-phase logits: running statistics, no dropout.
    pub fn forward_infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let batch = x.shape()[0];
        let mut h = crate::nn::relu(&self.stem.forward_infer(x)?);
        for b in &self.blocks {
            h = b.forward_infer(&h)?;
        }
        let h = h.reshape(&[batch, self.cfg.flat_features()])?;
        let h = crate::nn::relu(&self.fc1.forward_infer(&h)?);
        self.fc2.forward_infer(&h)
    }

    /// Backpropagates the logit gradient, accumulating parameter gradients;
    /// returns the gradient with respect to the input.
    pub fn backward(&mut self, dlogits: &Tensor) -> Result<Tensor> {
        let batch = dlogits.shape()[0];
        let g = self.fc2.backward(dlogits)?;
        let g = self.dropout.backward(&g)?;
        let g = self.relu_fc.backward(&g)?;
        let g = self.fc1.backward(&g)?;
        let (ch, len) = self.cfg.feature_shape();
        let mut g = g.reshape(&[batch, ch, len])?;
        for b in self.blocks.iter_mut().rev() {
            g = b.backward(&g)?;
        }
        let g = self.relu_stem.backward(&g)?;
        self.stem.backward(&g)
    }

    /// Class probabilities for a batch `(B, M, T)`.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        softmax(&self.forward_infer(x)?)
    }

    /// Probability of every class for one frame.
    pub fn classify_frame(&self, frame: &MultichannelFrame) -> Result<Vec<f32>> {
        if frame.num_channels() != self.cfg.num_mics
            || frame.samples().len() != self.cfg.num_mics * self.cfg.frame_len
        {
            return Err(Error::Dimension(format!(
                "frame is {}×{}, model expects {}×{}",
                frame.num_channels(),
                frame.samples().len() / frame.num_channels().max(1),
                self.cfg.num_mics,
                self.cfg.frame_len
            )));
        }
        let x = Tensor::from_vec(
            &[1, self.cfg.num_mics, self.cfg.frame_len],
            frame.samples().to_vec(),
        )?;
        Ok(self.predict(&x)?.into_data())
    }

    /// Trainable tensors in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        out.extend(self.stem.params_mut());
        for b in &mut self.blocks {
            out.extend(b.params_mut());
        }
        out.extend([
            &mut self.fc1.weights,
            &mut self.fc1.bias,
            &mut self.fc2.weights,
            &mut self.fc2.bias,
        ]);
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["conv1.kernel", "bn1.gamma", "bn1.beta"]
            .map(String::from)
            .to_vec();
        for (i, b) in self.blocks.iter().enumerate() {
            for part in ["conv_a.kernel", "bn_a.gamma", "bn_a.beta", "conv_b.kernel", "bn_b.gamma", "bn_b.beta"] {
                names.push(format!("block{i}.{part}"));
            }
            if b.projection.is_some() {
                for part in ["proj.kernel", "bn_proj.gamma", "bn_proj.beta"] {
                    names.push(format!("block{i}.{part}"));
                }
            }
        }
        names.extend(["fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"].map(String::from));
        names
    }

    pub fn num_params(&mut self) -> usize {
        self.params_mut().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Batch norm layers with their checkpoint name prefixes.
    pub fn batch_norms_mut(&mut self) -> Vec<(String, &mut BatchNormParams)> {
        let mut out = vec![("bn1".to_string(), &mut self.stem.bn.params)];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("block{i}.bn_a"), &mut b.first.bn.params));
            out.push((format!("block{i}.bn_b"), &mut b.second.bn.params));
            if let Some(p) = &mut b.projection {
                out.push((format!("block{i}.bn_proj"), &mut p.bn.params));
            }
        }
        out
    }
}
