use super::data::FrameSet;
use super::net::Model;
use crate::error::{Error, Result};
use crate::geometry::DirectionGrid;
use crate::nn::{cross_entropy_loss, one_hot, softmax};

/// Frames scored per inference batch during evaluation.
const EVAL_BATCH: usize = 256;

/// Accuracy and azimuth-error statistics of a set of predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub frames: usize,
    /// Fraction of all frames (silence included) classified correctly.
    pub frame_accuracy: f64,
    /// Accuracy over frames whose truth is a direction.
    pub direction_accuracy: f64,
    /// Population standard deviation (degrees) of predicted minus true
    /// azimuth, over frames where both are directions.
    pub azimuth_error_std: f64,
    /// `confusion[truth][predicted]` frame counts.
    pub confusion: Vec<Vec<usize>>,
    /// Mean |error| (degrees) per true direction, over frames predicted as
    /// a direction; NaN when there are none.
    pub mean_abs_error_per_azimuth: Vec<f64>,
    /// Share of misclassified direction frames whose prediction is a
    /// neighbouring grid direction; 1 when there are no such errors.
    pub adjacent_error_fraction: f64,
    /// Mean cross-entropy, when probabilities were available.
    pub loss: Option<f64>,
}

impl EvalReport {
    /// Scores class predictions against labels on `grid`.
    pub fn from_predictions(grid: &DirectionGrid, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let nc = grid.num_classes();
        if let Some(&c) = truth.iter().chain(predicted).find(|&&c| c >= nc) {
            return Err(Error::Index(format!("class {c} out of range for {nc} classes")));
        }
        let nd = grid.num_directions();
        let mut confusion = vec![vec![0usize; nc]; nc];
        let mut correct = 0usize;
        let (mut dir_frames, mut dir_correct) = (0usize, 0usize);
        let mut errors = Vec::new();
        let mut abs_sum = vec![0.0f64; nd];
        let mut abs_n = vec![0usize; nd];
        let (mut misses, mut adjacent) = (0usize, 0usize);

        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
            correct += (t == p) as usize;
            let (Some(ta), pa) = (grid.azimuth_of(t), grid.azimuth_of(p)) else {
                continue;
            };
            dir_frames += 1;
            dir_correct += (t == p) as usize;
            if t != p {
                misses += 1;
                if pa.is_some() && t.abs_diff(p) == 1 {
                    adjacent += 1;
                }
            }
            if let Some(pa) = pa {
                errors.push(pa - ta);
                abs_sum[t] += (pa - ta).abs();
                abs_n[t] += 1;
            }
        }

        let std = if errors.is_empty() {
            0.0
        } else {
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / errors.len() as f64).sqrt()
        };
        let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Ok(Self {
            frames: truth.len(),
            frame_accuracy: frac(correct, truth.len()),
            direction_accuracy: frac(dir_correct, dir_frames),
            azimuth_error_std: std,
            confusion,
            mean_abs_error_per_azimuth: abs_sum
                .iter()
                .zip(&abs_n)
                .map(|(s, &n)| if n == 0 { f64::NAN } else { s / n as f64 })
                .collect(),
            adjacent_error_fraction: if misses == 0 { 1.0 } else { frac(adjacent, misses) },
            loss: None,
        })
    }

    /// Confusion matrix as CSV with a `truth` column followed by one column
    /// per predicted class.
    pub fn confusion_csv(&self) -> String {
        let n = self.confusion.len();
        let mut out = String::from("truth");
        for c in 0..n {
            out.push_str(&format!(",pred_{c}"));
        }
        out.push('\n');
        for (t, row) in self.confusion.iter().enumerate() {
            out.push_str(&t.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn per_azimuth_csv(&self, grid: &DirectionGrid) -> String {
        let mut out = String::from("azimuth_deg,mean_abs_error_deg,frames\n");
        for (i, &az) in grid.azimuths().iter().enumerate() {
            let frames: usize = self.confusion.get(i).map_or(0, |r| r.iter().sum());
            out.push_str(&format!("{az},{:.4},{frames}\n", self.mean_abs_error_per_azimuth[i]));
        }
        out
    }
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Predicted class and probabilities for every frame of `set`.
pub fn predict_set(model: &Model, set: &FrameSet) -> Result<(Vec<usize>, Vec<Vec<f32>>)> {
    let nc = model.config().num_classes;
    let mut classes = Vec::with_capacity(set.len());
    let mut probs = Vec::with_capacity(set.len());
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(EVAL_BATCH) {
        let p = softmax(&model.forward_infer(&set.batch(chunk))?)?;
        for row in p.data().chunks(nc) {
            classes.push(argmax(row));
            probs.push(row.to_vec());
        }
    }
    Ok((classes, probs))
}

/// Runs the model over `set` in inference mode and scores it.
pub fn evaluate(model: &Model, set: &FrameSet, grid: &DirectionGrid) -> Result<EvalReport> {
    let nc = model.config().num_classes;
    if nc != grid.num_classes() {
        return Err(Error::Config(format!(
            "model has {nc} classes, grid has {}",
            grid.num_classes()
        )));
    }
    let (pred, probs) = predict_set(model, set)?;
    let mut report = EvalReport::from_predictions(grid, set.classes(), &pred)?;
    if !set.is_empty() {
        let flat: Vec<f32> = probs.into_iter().flatten().collect();
        let p = crate::nn::Tensor::from_vec(&[set.len(), nc], flat)?;
        let y = one_hot(set.classes(), nc)?;
        report.loss = Some(cross_entropy_loss(&p, &y)?.0);
    }
    Ok(report)
}
