//! Trains the residual network on synthetic frames, evaluates it and
//! saves a checkpoint.
//!
//! The defaults are a quick run. Pass `full` to use the full-size dataset
//! (2000/400 frames per class, 20 epochs; about ten minutes on one core).
//!
//! ```text
//! cargo run --release --example train_classifier [-- full]
//! ```

use sslnet::geometry::{ArrayGeometry, DirectionGrid};
use sslnet::model::{evaluate, save_checkpoint, train, Model, ModelConfig, TrainConfig, TrainingMeta};
use sslnet::sim::{synthesize_split, DatasetPlan, Split};

fn main() -> sslnet::Result<()> {
    let full = std::env::args().nth(1).as_deref() == Some("full");
    let geom = ArrayGeometry::default();
    let grid = DirectionGrid::default();
    let plan = if full {
        DatasetPlan::default()
    } else {
        DatasetPlan {
            frames_per_class: 200,
            val_frames_per_class: 50,
            ..Default::default()
        }
    };
    let cfg = TrainConfig {
        epochs: if full { 20 } else { 5 },
        ..Default::default()
    };

    let train_set = synthesize_split(&geom, &grid, &plan, Split::Train)?;
    let val = synthesize_split(&geom, &grid, &plan, Split::Val)?;
    println!("{} training frames, {} validation frames", train_set.len(), val.len());

    let mut model = Model::build(&ModelConfig::default(), cfg.seed)?;
    let history = train(&mut model, &train_set, &val, &grid, &cfg, |m| {
        println!(
            "epoch {:2}  train loss {:.4}  val loss {:.4}  val acc {:.3}  az std {:.2}°",
            m.epoch, m.train_loss, m.val_loss, m.val_accuracy, m.val_azimuth_std
        )
    })?;

    let report = evaluate(&model, &val, &grid)?;
    println!(
        "accuracy {:.4} (directions {:.4}), azimuth std {:.2}°, adjacent misses {:.3}",
        report.frame_accuracy, report.direction_accuracy, report.azimuth_error_std, report.adjacent_error_fraction
    );

    let last = history.epochs.last();
    let meta = TrainingMeta {
        epochs: cfg.epochs,
        seed: cfg.seed,
        train_loss: last.map(|m| m.train_loss),
        val_loss: last.map(|m| m.val_loss),
    };
    let path = std::env::temp_dir().join("sslnet-example.ckpt");
    save_checkpoint(&mut model, &meta, &path)?;
    println!("checkpoint written to {}", path.display());
    Ok(())
}
