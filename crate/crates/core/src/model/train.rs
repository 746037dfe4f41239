use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::FrameSet;
use super::eval::evaluate;
use super::net::Model;
use crate::error::{Error, Result};
use crate::geometry::DirectionGrid;
use crate::nn::{adam_step, cross_entropy_loss, one_hot, softmax, AdamConfig, AdamState};
use crate::sim::mix_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Drives shuffling and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_azimuth_std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainHistory {
    /// CSV with columns `epoch,train_loss,val_loss,val_acc,val_az_std`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc,val_az_std\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                e.epoch, e.train_loss, e.val_loss, e.val_accuracy, e.val_azimuth_std
            ));
        }
        out
    }
}

fn check_classes(set: &FrameSet, num_classes: usize, what: &str) -> Result<()> {
    if let Some(&c) = set.classes().iter().find(|&&c| c >= num_classes) {
        return Err(Error::Dataset(format!("{what} set has label {c} ≥ {num_classes}")));
    }
    let counts = set.class_counts(num_classes);
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Dataset(format!("{what} set has no frames of class {empty}")));
    }
    Ok(())
}

/// Trains with Adam on shuffled mini-batches; after every epoch the model
/// is scored on `val` in inference mode. `on_epoch` sees each epoch's
/// metrics as they are produced.
pub fn train(
    model: &mut Model,
    train_set: &FrameSet,
    val: &FrameSet,
    grid: &DirectionGrid,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainHistory> {
    cfg.adam.validate()?;
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let nc = model.config().num_classes;
    if nc != grid.num_classes() {
        return Err(Error::Config(format!(
            "model has {nc} classes, grid has {}",
            grid.num_classes()
        )));
    }
    check_classes(train_set, nc, "training")?;

    let mut state = {
        let params = model.params_mut();
        let refs: Vec<&crate::nn::Tensor> = params.iter().map(|p| &**p).collect();
        AdamState::new(&refs)
    };
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory::default();
    let mut step: u64 = 0;
    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed ^ mix_seed(epoch as u64)));
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let x = train_set.batch(idx);
            let labels: Vec<usize> = idx.iter().map(|&i| train_set.classes()[i]).collect();
            let y = one_hot(&labels, nc)?;
            model.zero_grad();
            step += 1;
            let logits = model.forward_train(&x, mix_seed(cfg.seed.wrapping_add(step)))?;
            let probs = softmax(&logits)?;
            let (loss, dlogits) = cross_entropy_loss(&probs, &y)?;
            model.backward(&dlogits)?;
            adam_step(&mut model.params_mut(), &mut state, &cfg.adam)?;
            loss_sum += loss * idx.len() as f64;
            for (row, &t) in probs.data().chunks(nc).zip(&labels) {
                let best = row
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &v)| if v > row[b] { i } else { b });
                correct += (best == t) as usize;
            }
        }
        let report = evaluate(model, val, grid)?;
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_loss: report.loss.unwrap_or(f64::NAN),
            val_accuracy: report.frame_accuracy,
            val_azimuth_std: report.azimuth_error_std,
        };
        on_epoch(&metrics);
        history.epochs.push(metrics);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvSpec, ModelConfig};
    use crate::geometry::DirectionGrid;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            num_mics: 2,
            frame_len: 24,
            conv1: ConvSpec::new(4, 3, 2),
            residual_blocks: vec![ConvSpec::new(4, 3, 2)],
            fc1_units: 16,
            num_classes: 3,
            dropout_keep: 1.0,
        }
    }

    fn tiny_set(n: usize, seed: u64) -> FrameSet {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = FrameSet::new(2, 24, 16000.0);
        for i in 0..n {
            let class = i % 3;
            let pcm: Vec<i16> = (0..48)
                .map(|t| {
                    let base = ((t as f64 * (class + 1) as f64 * 0.4).sin() * 8000.0) as i16;
                    base.saturating_add(rng.random_range(-3000..3000))
                })
                .collect();
            set.push_pcm(&pcm, class).unwrap();
        }
        set
    }

    fn grid3() -> DirectionGrid {
        DirectionGrid::new(vec![0.0, 90.0], true).unwrap()
    }

    #[test]
    fn overfits_small_set() {
        let set = tiny_set(30, 1);
        let mut model = Model::build(&tiny_config(), 2).unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 10,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..Default::default()
            },
            seed: 3,
        };
        let h = train(&mut model, &set, &set, &grid3(), &cfg, |_| {}).unwrap();
        let last = h.epochs.last().unwrap();
        assert_eq!(last.val_accuracy, 1.0, "{last:?}");
        assert!(last.train_loss < h.epochs[0].train_loss);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let set = tiny_set(24, 4);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 8,
            seed: 9,
            ..Default::default()
        };
        let run = || {
            let mut m = Model::build(&tiny_config(), 1).unwrap();
            train(&mut m, &set, &set, &grid3(), &cfg, |_| {}).unwrap()
        };
        let (a, b) = (run(), run());
        for (x, y) in a.epochs.iter().zip(&b.epochs) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
            assert_eq!(x.val_loss.to_bits(), y.val_loss.to_bits());
        }
        assert!(a.to_csv().starts_with("epoch,train_loss,val_loss,val_acc,val_az_std\n1,"));
    }

    #[test]
    fn missing_class_is_rejected() {
        let set = tiny_set(24, 4);
        let only01: Vec<usize> = (0..24).filter(|i| i % 3 != 2).collect();
        let sub = set.subset(&only01);
        let mut m = Model::build(&tiny_config(), 1).unwrap();
        let res = train(&mut m, &sub, &sub, &grid3(), &TrainConfig::default(), |_| {});
        assert!(matches!(res, Err(Error::Dataset(_))));
    }
}
