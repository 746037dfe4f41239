//! Verifies backpropagation through the full network against central
//! differences.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sslnet::model::{Model, ModelConfig};
use sslnet::nn::{
    cross_entropy_loss, gradient_check, one_hot, softmax, CheckMode, Differentiable, GradCheckConfig,
    Tensor,
};

struct Probe {
    model: Model,
    names: Vec<String>,
    x: Tensor,
    labels: Tensor,
}

impl Differentiable for Probe {
    fn num_params(&self) -> usize {
        self.names.len()
    }
    fn param_mut(&mut self, index: usize) -> &mut Tensor {
        self.model.params_mut().into_iter().nth(index).unwrap()
    }
    fn param_name(&self, index: usize) -> String {
        self.names[index].clone()
    }
    fn loss(&mut self) -> sslnet::Result<f64> {
        let logits = self.model.forward_train(&self.x, 1)?;
        Ok(cross_entropy_loss(&softmax(&logits)?, &self.labels)?.0)
    }
    fn loss_and_grad(&mut self) -> sslnet::Result<f64> {
        self.model.zero_grad();
        let logits = self.model.forward_train(&self.x, 1)?;
        let (loss, g) = cross_entropy_loss(&softmax(&logits)?, &self.labels)?;
        self.model.backward(&g)?;
        Ok(loss)
    }
}

fn main() -> sslnet::Result<()> {
    let cfg = ModelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 2 * cfg.num_mics * cfg.frame_len;
    let x = Tensor::from_vec(
        &[2, cfg.num_mics, cfg.frame_len],
        (0..n).map(|_| rng.random_range(-0.3..0.3)).collect(),
    )?;
    let model = Model::build(&cfg, 2)?;
    let mut probe = Probe {
        names: model.param_names(),
        model,
        x,
        labels: one_hot(&[4, 19], cfg.num_classes)?,
    };
    let report = gradient_check(
        &mut probe,
        &GradCheckConfig {
            mode: CheckMode::Directional,
            ..Default::default()
        },
    )?;
    for p in &report.params {
        println!("{:<28} rel error {:.2e}", p.name, p.max_rel_error);
    }
    println!("worst {:.2e}: {}", report.max_rel_error, if report.passes(2e-2) { "ok" } else { "FAILED" });
    Ok(())
}
