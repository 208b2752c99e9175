//! Per-channel batch normalization over the batch and length axes of `[B, L, C]`.

use super::{Mode, NnError, Tensor};

pub const DEFAULT_MOMENTUM: f64 = 0.99;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormState {
    /// gamma 1, beta 0, running mean 0, running variance 1.
    pub fn new(channels: usize) -> Self {
        Self::with_hyper(channels, DEFAULT_MOMENTUM, DEFAULT_EPSILON)
    }

    pub fn with_hyper(channels: usize, momentum: f64, epsilon: f64) -> Self {
        Self {
            gamma: Tensor::full(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
            momentum,
            epsilon,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// `running <- momentum * running + (1 - momentum) * batch`.
    pub fn update_running(&mut self, stats: &BatchStats) {
        let m = self.momentum;
        for (r, b) in self.running_mean.data_mut().iter_mut().zip(&stats.mean) {
            *r = m * *r + (1.0 - m) * b;
        }
        for (r, b) in self.running_var.data_mut().iter_mut().zip(&stats.var) {
            *r = m * *r + (1.0 - m) * b;
        }
    }
}

/// Biased per-channel moments of one training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BnCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
    gamma: Vec<f64>,
}

fn check_channels(x: &Tensor, state: &BatchNormState) -> Result<(usize, usize), NnError> {
    let (b, l, c) = x.blc()?;
    if c != state.channels() {
        return Err(NnError::ShapeMismatch(format!(
            "batch norm over {} channels got {c}",
            state.channels()
        )));
    }
    Ok((b * l, c))
}

/// Training-mode normalization with batch statistics; the state is not modified.
pub fn batchnorm_train(x: &Tensor, state: &BatchNormState) -> Result<(Tensor, BnCache, BatchStats), NnError> {
    let (n, c) = check_channels(x, state)?;
    if n < 2 {
        return Err(NnError::DegenerateBatch { count: n });
    }
    let xd = x.data();
    let mut mean = vec![0.0; c];
    for row in xd.chunks_exact(c) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; c];
    for row in xd.chunks_exact(c) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);

    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + state.epsilon).sqrt()).collect();
    let gamma = state.gamma.data();
    let beta = state.beta.data();
    let mut xhat = vec![0.0; xd.len()];
    let mut out = vec![0.0; xd.len()];
    for ((row, hrow), orow) in xd
        .chunks_exact(c)
        .zip(xhat.chunks_exact_mut(c))
        .zip(out.chunks_exact_mut(c))
    {
        for ch in 0..c {
            let h = (row[ch] - mean[ch]) * inv_std[ch];
            hrow[ch] = h;
            orow[ch] = gamma[ch] * h + beta[ch];
        }
    }
    let cache = BnCache {
        xhat: Tensor::from_vec(x.shape(), xhat)?,
        inv_std,
        gamma: gamma.to_vec(),
    };
    Ok((Tensor::from_vec(x.shape(), out)?, cache, BatchStats { mean, var }))
}

/// Inference-mode normalization with the running statistics.
pub fn batchnorm_infer(x: &Tensor, state: &BatchNormState) -> Result<Tensor, NnError> {
    let (_, c) = check_channels(x, state)?;
    let scale: Vec<f64> = (0..c)
        .map(|ch| state.gamma.data()[ch] / (state.running_var.data()[ch] + state.epsilon).sqrt())
        .collect();
    let mut out = x.data().to_vec();
    for row in out.chunks_exact_mut(c) {
        for ch in 0..c {
            row[ch] = (row[ch] - state.running_mean.data()[ch]) * scale[ch] + state.beta.data()[ch];
        }
    }
    Tensor::from_vec(x.shape(), out)
}

/// Mode-dispatching forward. Training mode also folds the batch moments into the running
/// statistics and returns a cache for [`batchnorm_backward`].
pub fn batchnorm_forward(
    x: &Tensor,
    state: &mut BatchNormState,
    mode: Mode,
) -> Result<(Tensor, Option<BnCache>), NnError> {
    match mode {
        Mode::Train => {
            let (y, cache, stats) = batchnorm_train(x, state)?;
            state.update_running(&stats);
            Ok((y, Some(cache)))
        }
        Mode::Infer => Ok((batchnorm_infer(x, state)?, None)),
    }
}

/// Gradients `(x, gamma, beta)` of training-mode batch norm, including the dependence of the
/// batch mean and variance on `x`.
pub fn batchnorm_backward(grad_out: &Tensor, cache: &BnCache) -> Result<(Tensor, Tensor, Tensor), NnError> {
    grad_out.expect_shape(cache.xhat.shape(), "batch norm grad_out")?;
    let c = cache.gamma.len();
    let n = (cache.xhat.len() / c) as f64;
    let g = grad_out.data();
    let h = cache.xhat.data();

    let mut ggamma = vec![0.0; c];
    let mut gbeta = vec![0.0; c];
    for (grow, hrow) in g.chunks_exact(c).zip(h.chunks_exact(c)) {
        for ch in 0..c {
            gbeta[ch] += grow[ch];
            ggamma[ch] += grow[ch] * hrow[ch];
        }
    }
    // dx = gamma * inv_std / n * (n * g - sum(g) - xhat * sum(g * xhat))
    let mut gx = vec![0.0; g.len()];
    for ((grow, hrow), xrow) in g.chunks_exact(c).zip(h.chunks_exact(c)).zip(gx.chunks_exact_mut(c)) {
        for ch in 0..c {
            let k = cache.gamma[ch] * cache.inv_std[ch] / n;
            xrow[ch] = k * (n * grow[ch] - gbeta[ch] - hrow[ch] * ggamma[ch]);
        }
    }
    Ok((
        Tensor::from_vec(grad_out.shape(), gx)?,
        Tensor::from_vec(&[c], ggamma)?,
        Tensor::from_vec(&[c], gbeta)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch() -> Tensor {
        let data: Vec<f64> = (0..24)
            .map(|i| ((i * 7) % 11) as f64 * 0.3 - 1.0 + (i % 2) as f64)
            .collect();
        Tensor::from_vec(&[2, 6, 2], data).unwrap()
    }

    fn channel_moments(t: &Tensor, ch: usize, c: usize) -> (f64, f64) {
        let v: Vec<f64> = t.data().iter().skip(ch).step_by(c).copied().collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
        (m, var)
    }

    #[test]
    fn neutral_infer_is_identity() {
        let mut s = BatchNormState::new(2);
        s.running_var = Tensor::full(&[2], 1.0 - s.epsilon);
        let x = batch();
        let y = batchnorm_infer(&x, &s).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn train_output_is_standardized() {
        let s = BatchNormState::new(2);
        let (_, cache, _) = batchnorm_train(&batch(), &s).unwrap();
        for ch in 0..2 {
            let (m, v) = channel_moments(&cache.xhat, ch, 2);
            assert!(m.abs() < 1e-6);
            // epsilon shrinks the variance slightly below one: var / (var + eps)
            let (_, raw_var) = channel_moments(&batch(), ch, 2);
            assert!((v - raw_var / (raw_var + s.epsilon)).abs() < 1e-6);
        }
    }

    #[test]
    fn gamma_beta_set_moments() {
        let mut s = BatchNormState::with_hyper(2, 0.99, 0.0);
        s.gamma = Tensor::full(&[2], 2.0);
        s.beta = Tensor::full(&[2], 3.0);
        let (y, _, _) = batchnorm_train(&batch(), &s).unwrap();
        for ch in 0..2 {
            let (m, v) = channel_moments(&y, ch, 2);
            assert!((m - 3.0).abs() < 1e-5);
            assert!((v.sqrt() - 2.0).abs() < 1e-5);
        }
    }

    #[test]
    fn running_stats_update() {
        let mut s = BatchNormState::new(2);
        let x = batch();
        let (_, _) = batchnorm_forward(&x, &mut s, Mode::Train).unwrap();
        let (m0, v0) = channel_moments(&x, 0, 2);
        assert!((s.running_mean.data()[0] - 0.01 * m0).abs() < 1e-12);
        assert!((s.running_var.data()[0] - (0.99 + 0.01 * v0)).abs() < 1e-12);
        let before = s.clone();
        batchnorm_forward(&x, &mut s, Mode::Infer).unwrap();
        assert_eq!(before, s);
    }

    #[test]
    fn degenerate_batch() {
        let s = BatchNormState::new(3);
        let x = Tensor::zeros(&[1, 1, 3]);
        assert!(matches!(
            batchnorm_train(&x, &s),
            Err(NnError::DegenerateBatch { count: 1 })
        ));
    }

    #[test]
    fn zero_grad_and_constant_grad() {
        let s = BatchNormState::new(2);
        let (_, cache, _) = batchnorm_train(&batch(), &s).unwrap();
        let (gx, gg, gb) = batchnorm_backward(&Tensor::zeros(&[2, 6, 2]), &cache).unwrap();
        assert!(gx.data().iter().chain(gg.data()).chain(gb.data()).all(|&v| v == 0.0));

        let (gx, _, gb) = batchnorm_backward(&Tensor::full(&[2, 6, 2], 0.7), &cache).unwrap();
        assert!((gb.data()[0] - 0.7 * 12.0).abs() < 1e-12);
        for ch in 0..2 {
            let s: f64 = gx.data().iter().skip(ch).step_by(2).sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
