use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{loss, loss_grad, Adam, EarlyStopping, Optimizer, Plateau, TrainConfig, TrainError};
use crate::dsp::Sample;
use crate::nn::{batch_tensor, Mode, ModelParams};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean of the batch losses, L2 penalty included.
    pub loss: f64,
    /// Accuracy of the training-mode predictions made during the epoch.
    pub accuracy: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub best_loss: f64,
    pub final_loss: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl TrainLog {
    /// One JSON object per epoch, newline terminated. Wall times are omitted so the
    /// output is reproducible.
    pub fn to_jsonl(&self) -> String {
        self.epochs
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain struct") + "\n")
            .collect()
    }
}

/// Trains with Adam. Returns the end-of-training parameters in `params`.
pub fn fit(dataset: &[Sample], params: &mut ModelParams, cfg: &TrainConfig) -> Result<TrainLog, TrainError> {
    let mut adam = Adam::new(params.trainables(), cfg);
    fit_with(dataset, params, cfg, &mut adam, |_| {})
}

/// Training loop with a caller-supplied optimizer and a per-epoch callback.
pub fn fit_with<O, F>(
    dataset: &[Sample],
    params: &mut ModelParams,
    cfg: &TrainConfig,
    optimizer: &mut O,
    mut on_epoch: F,
) -> Result<TrainLog, TrainError>
where
    O: Optimizer + ?Sized,
    F: FnMut(&EpochRecord),
{
    cfg.validate()?;
    let first = dataset.first().ok_or(TrainError::EmptyDataset)?;
    let seg = first.seg_len;
    let n_leads = params.arch.n_leads;
    if let Some(bad) = dataset.iter().find(|s| s.seg_len != seg || s.x.len() != n_leads * seg) {
        return Err(TrainError::ShapeMismatch(format!(
            "sample {}#{} has {} values, expected {}",
            bad.record_name,
            bad.segment_index,
            bad.x.len(),
            n_leads * seg
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut plateau = Plateau::new(cfg);
    let mut stopper = EarlyStopping::new(cfg.stop_patience);
    let mut lr = cfg.lr_init;
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;
    let n_dense_w = params.trainables().len() - 2;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut weighted_loss = 0.0;
        let mut correct = 0usize;

        for idx in order.chunks(cfg.batch_size) {
            let x = batch_tensor(idx.iter().map(|&i| dataset[i].x.as_slice()), n_leads, seg)?;
            let labels: Vec<Label> = idx.iter().map(|&i| dataset[i].label).collect();

            let (out, cache) = params.forward(&x, Mode::Train)?;
            let cache = cache.expect("training mode returns a cache");
            let batch_loss = loss(&out.probs, &labels, &params.dense_w, cfg.lambda_l2)?;
            weighted_loss += batch_loss * idx.len() as f64;
            correct += labels
                .iter()
                .enumerate()
                .filter(|(r, &y)| Label::from_probs(out.probs.row(*r)) == y)
                .count();

            let grad_probs = loss_grad(&out.probs, &labels)?;
            let mut grads = params.backward(&grad_probs, &cache)?;
            // d/dw lambda * sum(w^2)
            let dense_grad = &mut grads.tensors[n_dense_w];
            for (g, w) in dense_grad.data_mut().iter_mut().zip(params.dense_w.data()) {
                *g += 2.0 * cfg.lambda_l2 * w;
            }
            let mut trainables = params.trainables_mut();
            optimizer.step(&mut trainables, &grads.tensors, lr)?;
        }

        let epoch_loss = weighted_loss / dataset.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let record = EpochRecord {
            epoch,
            loss: epoch_loss,
            accuracy: correct as f64 / dataset.len() as f64,
            lr,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        epochs.push(record);

        if stopper.observe(epoch_loss) {
            stop_reason = StopReason::EarlyStop;
            break;
        }
        lr = plateau.observe(epoch_loss, lr);
    }

    let final_loss = epochs.last().map_or(f64::NAN, |e| e.loss);
    Ok(TrainLog {
        epochs,
        stop_reason,
        best_loss: stopper.best(),
        final_loss,
        adam_epsilon: cfg.adam_epsilon,
        seed: cfg.seed,
    })
}
