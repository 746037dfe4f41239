//! Finite-difference verification of analytic gradients.

use super::Tensor;
use crate::error::Result;

/// A scalar loss over a set of parameter tensors whose gradients can be
/// computed analytically.
pub trait Differentiable {
    fn num_params(&self) -> usize;
    fn param_mut(&mut self, index: usize) -> &mut Tensor;
    fn param_name(&self, index: usize) -> String {
        format!("param{index}")
    }
    /// Loss at the current parameter values.
    fn loss(&mut self) -> Result<f64>;
    /// Loss with analytic gradients written into the parameter gradient
    /// buffers, which the implementation zeroes first.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

/// How numeric derivatives are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Every parameter entry separately.
    PerEntry,
    /// One derivative per tensor along its normalized analytic gradient.
    /// Compares the directional slope with the gradient norm.
    Directional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub step: f32,
    pub mode: CheckMode,
    /// Magnitudes below this do not inflate the relative error.
    pub floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            mode: CheckMode::PerEntry,
            floor: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

fn rel_error(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Compares analytic gradients against central differences with step `h`.
pub fn gradient_check<F: Differentiable + ?Sized>(
    f: &mut F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    f.loss_and_grad()?;
    let analytic: Vec<Vec<f32>> = (0..f.num_params())
        .map(|i| {
            let p = f.param_mut(i);
            p.grad().map_or_else(|| vec![0.0; p.len()], <[f32]>::to_vec)
        })
        .collect();

    let h = cfg.step;
    let mut params = Vec::with_capacity(analytic.len());
    for (i, grad) in analytic.iter().enumerate() {
        let mut check = ParamCheck {
            name: f.param_name(i),
            max_rel_error: 0.0,
            worst_analytic: 0.0,
            worst_numeric: 0.0,
        };
        match cfg.mode {
            CheckMode::PerEntry => {
                for (e, &g) in grad.iter().enumerate() {
                    let orig = f.param_mut(i).data()[e];
                    f.param_mut(i).data_mut()[e] = orig + h;
                    let lp = f.loss()?;
                    f.param_mut(i).data_mut()[e] = orig - h;
                    let lm = f.loss()?;
                    f.param_mut(i).data_mut()[e] = orig;
                    // actual step after f32 rounding
                    let span = ((orig + h) as f64) - ((orig - h) as f64);
                    let num = (lp - lm) / span;
                    let err = rel_error(g as f64, num, cfg.floor);
                    if err > check.max_rel_error {
                        check.max_rel_error = err;
                        check.worst_analytic = g as f64;
                        check.worst_numeric = num;
                    }
                }
            }
            CheckMode::Directional => {
                let norm = grad.iter().map(|&g| (g as f64).powi(2)).sum::<f64>().sqrt();
                if norm > 0.0 {
                    let orig = f.param_mut(i).data().to_vec();
                    let dir: Vec<f32> = grad.iter().map(|&g| (g as f64 / norm) as f32).collect();
                    let shifted = |sign: f32| -> Vec<f32> {
                        orig.iter().zip(&dir).map(|(w, d)| w + sign * h * d).collect()
                    };
                    f.param_mut(i).data_mut().copy_from_slice(&shifted(1.0));
                    let lp = f.loss()?;
                    f.param_mut(i).data_mut().copy_from_slice(&shifted(-1.0));
                    let lm = f.loss()?;
                    f.param_mut(i).data_mut().copy_from_slice(&orig);
                    let num = (lp - lm) / (2.0 * h as f64);
                    check.max_rel_error = rel_error(norm, num, cfg.floor);
                    check.worst_analytic = norm;
                    check.worst_numeric = num;
                }
            }
        }
        params.push(check);
    }
    let max_rel_error = params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_rel_error,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{
        cross_entropy_loss, one_hot, softmax, BatchNorm1d, BatchNormParams, Conv1d, Conv1dParams,
        Dense, Relu,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng, scale: f32) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    /// conv → batch norm → relu → dense → softmax + cross-entropy.
    struct MicroNet {
        x: Tensor,
        labels: Tensor,
        conv: Conv1d,
        bn: BatchNorm1d,
        relu: Relu,
        fc: Dense,
        flip_fc_sign: bool,
    }

    impl MicroNet {
        fn new(seed: u64) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random(&[4, 2, 6], &mut rng, 1.0);
            let conv = Conv1d::new(Conv1dParams::new(random(&[3, 2, 3], &mut rng, 0.5), 2).unwrap());
            let mut bnp = BatchNormParams::new(3);
            bnp.gamma = random(&[3], &mut rng, 1.0);
            bnp.beta = random(&[3], &mut rng, 0.5);
            let fc = Dense::new(random(&[9, 5], &mut rng, 0.5), random(&[5], &mut rng, 0.1)).unwrap();
            Self {
                x,
                labels: one_hot(&[0, 3, 1, 4], 5).unwrap(),
                conv,
                bn: BatchNorm1d::new(bnp),
                relu: Relu::new(),
                fc,
                flip_fc_sign: false,
            }
        }

        fn forward(&mut self) -> Result<Tensor> {
            let h = self.conv.forward_train(&self.x)?;
            let h = self.bn.forward_train(&h)?;
            let h = self.relu.forward_train(&h);
            let h = h.reshape(&[4, 9])?;
            self.fc.forward_train(&h)
        }
    }

    impl Differentiable for MicroNet {
        fn num_params(&self) -> usize {
            6
        }
        fn param_mut(&mut self, index: usize) -> &mut Tensor {
            match index {
                0 => &mut self.conv.params.kernel,
                1 => &mut self.bn.params.gamma,
                2 => &mut self.bn.params.beta,
                3 => &mut self.fc.weights,
                4 => &mut self.fc.bias,
                _ => &mut self.x,
            }
        }
        fn loss(&mut self) -> Result<f64> {
            let logits = self.forward()?;
            Ok(cross_entropy_loss(&softmax(&logits)?, &self.labels)?.0)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            for i in 0..self.num_params() {
                self.param_mut(i).zero_grad();
            }
            let logits = self.forward()?;
            let (loss, dlogits) = cross_entropy_loss(&softmax(&logits)?, &self.labels)?;
            let g = self.fc.backward(&dlogits)?.reshape(&[4, 3, 3])?;
            if self.flip_fc_sign {
                for v in self.fc.weights.grad_mut() {
                    *v = -*v;
                }
            }
            let g = self.relu.backward(&g)?;
            let g = self.bn.backward(&g)?;
            let dx = self.conv.backward(&g)?;
            self.x.grad_mut().copy_from_slice(dx.data());
            Ok(loss)
        }
    }

    struct Linear {
        x: Tensor,
        layer: Dense,
        weights: Tensor,
    }

    impl Differentiable for Linear {
        fn num_params(&self) -> usize {
            3
        }
        fn param_mut(&mut self, index: usize) -> &mut Tensor {
            match index {
                0 => &mut self.layer.weights,
                1 => &mut self.layer.bias,
                _ => &mut self.x,
            }
        }
        fn loss(&mut self) -> Result<f64> {
            let y = self.layer.forward_infer(&self.x)?;
            Ok(y.data().iter().zip(self.weights.data()).map(|(a, b)| (a * b) as f64).sum())
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            for i in 0..3 {
                self.param_mut(i).zero_grad();
            }
            let loss = self.loss()?;
            self.layer.forward_train(&self.x)?;
            let dx = self.layer.backward(&self.weights.clone())?;
            self.x.grad_mut().copy_from_slice(dx.data());
            Ok(loss)
        }
    }

    #[test]
    fn micro_net_gradients() {
        let mut net = MicroNet::new(7);
        let report = gradient_check(&mut net, &GradCheckConfig::default()).unwrap();
        assert!(report.passes(1e-2), "{report:?}");
    }

    #[test]
    fn linear_layer_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut lin = Linear {
            x: random(&[3, 4], &mut rng, 1.0),
            layer: Dense::new(random(&[4, 2], &mut rng, 1.0), random(&[2], &mut rng, 1.0)).unwrap(),
            weights: random(&[3, 2], &mut rng, 1.0),
        };
        let report = gradient_check(&mut lin, &GradCheckConfig::default()).unwrap();
        assert!(report.passes(1e-3), "{report:?}");
    }

    #[test]
    fn sign_flip_is_detected() {
        let mut net = MicroNet::new(7);
        net.flip_fc_sign = true;
        for mode in [CheckMode::PerEntry, CheckMode::Directional] {
            let cfg = GradCheckConfig {
                mode,
                ..Default::default()
            };
            let report = gradient_check(&mut net, &cfg).unwrap();
            assert!(report.max_rel_error > 0.5, "{mode:?}: {report:?}");
        }
    }

    #[test]
    fn directional_mode_agrees() {
        let mut net = MicroNet::new(11);
        let cfg = GradCheckConfig {
            mode: CheckMode::Directional,
            ..Default::default()
        };
        let report = gradient_check(&mut net, &cfg).unwrap();
        assert!(report.passes(1e-2), "{report:?}");
    }
}
