//! The three-lead inception network.
//!
//! Each lead feeds one inception block of parallel `conv -> batch norm -> ReLU -> max pool`
//! paths, one per window length. Every path output is globally average pooled; the pooled
//! values of all paths, lead II paths first then III then aVF and windows ascending within a
//! lead, form the feature vector consumed by a two-unit dense softmax layer. Pooling each
//! path separately equals pooling the channel-wise concatenation of the path outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activation::{relu, relu_backward};
use super::batchnorm::{batchnorm_backward, batchnorm_infer, batchnorm_train, BatchNormState, BatchStats, BnCache};
use super::conv::{conv1d_backward_params, conv1d_forward, ConvCache, ConvSpec};
use super::dense::{dense_backward, dense_forward, softmax, softmax_backward};
use super::pool::{global_avg_pool, global_avg_pool_backward, maxpool, maxpool_backward, PoolCache};
use super::{Mode, NnError, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub windows: Vec<usize>,
    pub n_filters: usize,
    pub n_leads: usize,
    pub n_classes: usize,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            windows: vec![3, 5, 7, 9, 16, 32, 64],
            n_filters: 4,
            n_leads: 3,
            n_classes: 2,
            bn_momentum: super::batchnorm::DEFAULT_MOMENTUM,
            bn_epsilon: super::batchnorm::DEFAULT_EPSILON,
        }
    }
}

impl Architecture {
    pub fn n_paths(&self) -> usize {
        self.windows.len()
    }

    /// Width of the pooled feature vector.
    pub fn feature_width(&self) -> usize {
        self.n_leads * self.n_paths() * self.n_filters
    }

    pub fn trainable_count(&self) -> usize {
        let f = self.n_filters;
        let per_lead: usize = self.windows.iter().map(|w| w * f + f + 2 * f).sum();
        self.n_leads * per_lead + self.feature_width() * self.n_classes + self.n_classes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub spec: ConvSpec,
    /// `[window, 1, n_filters]`
    pub conv_w: Tensor,
    pub conv_b: Tensor,
    pub bn: BatchNormState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    /// `leads[lead][path]`
    pub leads: Vec<Vec<PathParams>>,
    /// `[feature_width, n_classes]`
    pub dense_w: Tensor,
    pub dense_b: Tensor,
}

/// Per-parameter gradients in [`ModelParams::trainables`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

#[derive(Debug, Clone)]
pub struct ModelOutput {
    /// `[B, n_classes]`
    pub probs: Tensor,
    /// `[B, feature_width]`
    pub features: Tensor,
}

#[derive(Debug, Clone)]
struct PathCache {
    conv: ConvCache,
    bn: BnCache,
    pre_relu: Tensor,
    pool: PoolCache,
    pooled_shape: Vec<usize>,
}

/// Intermediate values of a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    paths: Vec<PathCache>,
    features: Tensor,
    probs: Tensor,
}

fn glorot(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
    Tensor::from_vec(shape, data).expect("shape product")
}

struct PathOut {
    pooled: Tensor,
    cache: Option<PathCache>,
    stats: Option<BatchStats>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, unit gamma, zero beta.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = arch.n_filters;
        let leads = (0..arch.n_leads)
            .map(|_| {
                arch.windows
                    .iter()
                    .map(|&w| PathParams {
                        spec: ConvSpec::new(w, f),
                        conv_w: glorot(&mut rng, &[w, 1, f], w, w * f),
                        conv_b: Tensor::zeros(&[f]),
                        bn: BatchNormState::with_hyper(f, arch.bn_momentum, arch.bn_epsilon),
                    })
                    .collect()
            })
            .collect();
        let d = arch.feature_width();
        let dense_w = glorot(&mut rng, &[d, arch.n_classes], d, arch.n_classes);
        Self {
            arch: arch.clone(),
            leads,
            dense_w,
            dense_b: Tensor::zeros(&[arch.n_classes]),
        }
    }

    fn paths(&self) -> impl Iterator<Item = &PathParams> {
        self.leads.iter().flatten()
    }

    /// Trainable tensors: per lead and path `conv_w, conv_b, gamma, beta`, then `dense_w, dense_b`.
    pub fn trainables(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        for p in self.paths() {
            out.extend([&p.conv_w, &p.conv_b, &p.bn.gamma, &p.bn.beta]);
        }
        out.extend([&self.dense_w, &self.dense_b]);
        out
    }

    pub fn trainables_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for p in self.leads.iter_mut().flatten() {
            out.push(&mut p.conv_w);
            out.push(&mut p.conv_b);
            out.push(&mut p.bn.gamma);
            out.push(&mut p.bn.beta);
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    pub fn trainable_count(&self) -> usize {
        self.trainables().iter().map(|t| t.len()).sum()
    }

    /// Every stored tensor in checkpoint order: per lead and path
    /// `conv_w, conv_b, gamma, beta, running_mean, running_var`, then `dense_w, dense_b`.
    pub fn state_tensors(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        for p in self.paths() {
            out.extend([
                &p.conv_w,
                &p.conv_b,
                &p.bn.gamma,
                &p.bn.beta,
                &p.bn.running_mean,
                &p.bn.running_var,
            ]);
        }
        out.extend([&self.dense_w, &self.dense_b]);
        out
    }

    pub fn state_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for p in self.leads.iter_mut().flatten() {
            out.push(&mut p.conv_w);
            out.push(&mut p.conv_b);
            out.push(&mut p.bn.gamma);
            out.push(&mut p.bn.beta);
            out.push(&mut p.bn.running_mean);
            out.push(&mut p.bn.running_var);
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out
    }

    /// Checks an input batch `[B, n_leads, L]` and returns `(B, L)`.
    fn check_input(&self, x: &Tensor) -> Result<(usize, usize), NnError> {
        match *x.shape() {
            [b, leads, l] if leads == self.arch.n_leads && b > 0 && l >= 2 => Ok((b, l)),
            _ => Err(NnError::ShapeMismatch(format!(
                "model input must be [B, {}, L] with B >= 1 and L >= 2, got {:?}",
                self.arch.n_leads,
                x.shape()
            ))),
        }
    }

    fn run(&self, x: &Tensor, mode: Mode) -> Result<(ModelOutput, Option<ForwardCache>, Vec<BatchStats>), NnError> {
        let (b, l) = self.check_input(x)?;
        let n_leads = self.arch.n_leads;
        let lead_inputs: Vec<Tensor> = (0..n_leads)
            .map(|lead| {
                let mut data = Vec::with_capacity(b * l);
                for bi in 0..b {
                    let start = (bi * n_leads + lead) * l;
                    data.extend_from_slice(&x.data()[start..start + l]);
                }
                Tensor::from_vec(&[b, l, 1], data).expect("b * l values")
            })
            .collect();

        let n_paths = self.arch.n_paths();
        let flat: Vec<&PathParams> = self.paths().collect();
        let outs = flat
            .par_iter()
            .enumerate()
            .map(|(i, p)| path_forward(&lead_inputs[i / n_paths], p, mode))
            .collect::<Result<Vec<PathOut>, NnError>>()?;

        let f = self.arch.n_filters;
        let d = self.arch.feature_width();
        let mut features = vec![0.0; b * d];
        for (i, out) in outs.iter().enumerate() {
            for bi in 0..b {
                features[bi * d + i * f..bi * d + (i + 1) * f].copy_from_slice(out.pooled.row(bi));
            }
        }
        let features = Tensor::from_vec(&[b, d], features)?;
        let probs = softmax(&dense_forward(&features, &self.dense_w, &self.dense_b)?)?;

        let mut stats = Vec::new();
        let mut caches = Vec::new();
        for out in outs {
            if let Some(s) = out.stats {
                stats.push(s);
            }
            if let Some(c) = out.cache {
                caches.push(c);
            }
        }
        let cache = (mode == Mode::Train).then(|| ForwardCache {
            paths: caches,
            features: features.clone(),
            probs: probs.clone(),
        });
        Ok((ModelOutput { probs, features }, cache, stats))
    }

    /// Forward pass. Training mode normalizes with batch statistics, folds them into the
    /// running statistics, and returns the cache needed by [`ModelParams::backward`].
    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<(ModelOutput, Option<ForwardCache>), NnError> {
        let (out, cache, stats) = self.run(x, mode)?;
        for (p, s) in self.leads.iter_mut().flatten().zip(&stats) {
            p.bn.update_running(s);
        }
        Ok((out, cache))
    }

    /// Inference-mode forward pass; a pure function of `(x, self)`.
    pub fn infer(&self, x: &Tensor) -> Result<ModelOutput, NnError> {
        Ok(self.run(x, Mode::Infer)?.0)
    }

    /// Reverse pass from `dL/dprobs` to every trainable tensor.
    pub fn backward(&self, grad_probs: &Tensor, cache: &ForwardCache) -> Result<Gradients, NnError> {
        let grad_logits = softmax_backward(&cache.probs, grad_probs)?;
        let (grad_features, gw, gb) = dense_backward(&grad_logits, &cache.features, &self.dense_w)?;
        let (b, d) = grad_features.rows_cols()?;
        let f = self.arch.n_filters;

        let flat: Vec<&PathParams> = self.paths().collect();
        if flat.len() != cache.paths.len() {
            return Err(NnError::ShapeMismatch("cache does not match model".into()));
        }
        let per_path = flat
            .par_iter()
            .zip(cache.paths.par_iter())
            .enumerate()
            .map(|(i, (p, pc))| {
                let mut g = Vec::with_capacity(b * f);
                for bi in 0..b {
                    g.extend_from_slice(&grad_features.data()[bi * d + i * f..bi * d + (i + 1) * f]);
                }
                path_backward(&Tensor::from_vec(&[b, f], g)?, p, pc)
            })
            .collect::<Result<Vec<[Tensor; 4]>, NnError>>()?;

        let mut tensors: Vec<Tensor> = per_path.into_iter().flatten().collect();
        tensors.push(gw);
        tensors.push(gb);
        Ok(Gradients { tensors })
    }
}

fn path_forward(x: &Tensor, p: &PathParams, mode: Mode) -> Result<PathOut, NnError> {
    let (y, conv) = conv1d_forward(x, p.spec, &p.conv_w, &p.conv_b)?;
    match mode {
        Mode::Train => {
            let (z, bn, stats) = batchnorm_train(&y, &p.bn)?;
            let (pooled_map, pool) = maxpool(&relu(&z))?;
            let pooled = global_avg_pool(&pooled_map)?;
            Ok(PathOut {
                pooled,
                cache: Some(PathCache {
                    conv,
                    bn,
                    pre_relu: z,
                    pool,
                    pooled_shape: pooled_map.shape().to_vec(),
                }),
                stats: Some(stats),
            })
        }
        Mode::Infer => {
            let z = batchnorm_infer(&y, &p.bn)?;
            let (pooled_map, _) = maxpool(&relu(&z))?;
            Ok(PathOut {
                pooled: global_avg_pool(&pooled_map)?,
                cache: None,
                stats: None,
            })
        }
    }
}

fn path_backward(grad_pooled: &Tensor, p: &PathParams, c: &PathCache) -> Result<[Tensor; 4], NnError> {
    let g = global_avg_pool_backward(grad_pooled, &c.pooled_shape)?;
    let g = maxpool_backward(&g, &c.pool)?;
    let g = relu_backward(&c.pre_relu, &g)?;
    let (g, ggamma, gbeta) = batchnorm_backward(&g, &c.bn)?;
    let (gw, gb) = conv1d_backward_params(&g, &c.conv, &p.conv_w)?;
    Ok([gw, gb, ggamma, gbeta])
}

/// Functional form of [`ModelParams::forward`].
pub fn model_forward(
    params: &mut ModelParams,
    batch: &Tensor,
    mode: Mode,
) -> Result<(ModelOutput, Option<ForwardCache>), NnError> {
    params.forward(batch, mode)
}

/// Functional form of [`ModelParams::backward`].
pub fn model_backward(params: &ModelParams, grad_probs: &Tensor, cache: &ForwardCache) -> Result<Gradients, NnError> {
    params.backward(grad_probs, cache)
}

/// Stacks sample arrays of `n_leads * len` values into a `[B, n_leads, len]` batch.
pub fn batch_tensor<'a, I>(samples: I, n_leads: usize, len: usize) -> Result<Tensor, NnError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut data = Vec::new();
    let mut b = 0;
    for s in samples {
        if s.len() != n_leads * len {
            return Err(NnError::ShapeMismatch(format!(
                "sample has {} values, expected {}",
                s.len(),
                n_leads * len
            )));
        }
        data.extend_from_slice(s);
        b += 1;
    }
    Tensor::from_vec(&[b, n_leads, len], data)
}
