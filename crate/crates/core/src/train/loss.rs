//! Binary cross-entropy on the IMI probability with an L2 penalty on the dense weights.

use super::TrainError;
use crate::nn::Tensor;
use crate::Label;

pub const PROB_CLAMP: f64 = 1e-12;

fn check(probs: &Tensor, labels: &[Label]) -> Result<(), TrainError> {
    match *probs.shape() {
        [b, 2] if b == labels.len() && b > 0 => Ok(()),
        _ => Err(TrainError::ShapeMismatch(format!(
            "probabilities {:?} for {} labels",
            probs.shape(),
            labels.len()
        ))),
    }
}

/// Batch mean of `-y ln p - (1 - y) ln(1 - p)`, `p` the IMI probability clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn data_loss(probs: &Tensor, labels: &[Label]) -> Result<f64, TrainError> {
    check(probs, labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = probs.row(i)[1].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            match y {
                Label::Imi => -p.ln(),
                Label::Hc => -(1.0 - p).ln(),
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

/// Data loss plus `lambda * sum(dense_w^2)`.
pub fn loss(probs: &Tensor, labels: &[Label], dense_w: &Tensor, lambda: f64) -> Result<f64, TrainError> {
    Ok(data_loss(probs, labels)? + lambda * dense_w.sum_squares())
}

/// Gradient of [`data_loss`] with respect to the probabilities. Only the IMI column carries
/// gradient; it is zero wherever the clamp is active.
pub fn loss_grad(probs: &Tensor, labels: &[Label]) -> Result<Tensor, TrainError> {
    check(probs, labels)?;
    let n = labels.len() as f64;
    let mut g = vec![0.0; probs.len()];
    for (i, &y) in labels.iter().enumerate() {
        let p = probs.row(i)[1];
        if p > PROB_CLAMP && p < 1.0 - PROB_CLAMP {
            g[2 * i + 1] = match y {
                Label::Imi => -1.0 / p,
                Label::Hc => 1.0 / (1.0 - p),
            } / n;
        }
    }
    Ok(Tensor::from_vec(probs.shape(), g)?)
}
