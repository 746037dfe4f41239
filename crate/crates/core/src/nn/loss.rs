use super::Tensor;
use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Row-wise softmax of a `(batch, C)` tensor with per-row max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    logits.expect_rank(2, "softmax input")?;
    let c = logits.shape()[1];
    let mut out = logits.clone();
    if c == 0 {
        return Ok(out);
    }
    for row in out.data_mut().chunks_mut(c) {
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut total = 0.0f64;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v as f64;
        }
        for v in row.iter_mut() {
            *v = (*v as f64 / total) as f32;
        }
    }
    Ok(out)
}

/// Mean negative log-likelihood `−(1/N)·Σ y·log p` and its gradient with
/// respect to the pre-softmax logits, `(p − y)/N`.
pub fn cross_entropy_loss(probs: &Tensor, onehot: &Tensor) -> Result<(f64, Tensor)> {
    probs.expect_rank(2, "cross-entropy probabilities")?;
    if probs.shape() != onehot.shape() {
        return Err(Error::Dimension(format!(
            "probabilities {:?} and labels {:?} differ in shape",
            probs.shape(),
            onehot.shape()
        )));
    }
    let (n, c) = (probs.shape()[0], probs.shape()[1]);
    if n == 0 {
        return Err(Error::Dimension("empty batch".into()));
    }
    for (i, row) in onehot.data().chunks(c).enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || zeros != c - 1 {
            return Err(Error::Validation(format!("label row {i} is not one-hot")));
        }
    }
    let mut loss = 0.0f64;
    let mut grad = Tensor::zeros(probs.shape());
    let inv_n = 1.0 / n as f32;
    for ((p, y), g) in probs
        .data()
        .iter()
        .zip(onehot.data())
        .zip(grad.data_mut().iter_mut())
    {
        if *y == 1.0 {
            loss -= (*p as f64).max(PROB_FLOOR).ln();
        }
        *g = (p - y) * inv_n;
    }
    Ok((loss / n as f64, grad))
}

/// One-hot `(N, C)` labels from class indices.
pub fn one_hot(classes: &[usize], num_classes: usize) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[classes.len(), num_classes]);
    for (i, &c) in classes.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::Index(format!(
                "class {c} out of range for {num_classes} classes"
            )));
        }
        t.data_mut()[i * num_classes + c] = 1.0;
    }
    Ok(t)
}
