//! Central finite-difference gradient checks for every layer and for a reduced-length model.
//!
//! Errors are reported per gradient tensor as `|a - n|_2 / max(|a|_2, |n|_2, FLOOR)` where `a` is
//! the analytic and `n` the numeric gradient. The floor keeps tensors whose exact gradient is zero
//! (a convolution bias followed by batch normalization) from dividing noise by noise.

#![allow(dead_code)]

use imicnn_core::nn::{
    batchnorm_backward, batchnorm_train, conv1d_backward, conv1d_forward, dense_backward, dense_softmax,
    global_avg_pool, global_avg_pool_backward, maxpool, maxpool_backward, relu, relu_backward, softmax_backward,
    Architecture, BatchNormState, ConvSpec, Mode, ModelParams, Tensor,
};
use imicnn_core::train::{data_loss, loss, loss_grad};
use imicnn_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const FLOOR: f64 = 1e-6;

pub fn rel_err(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(n)).max(FLOOR)
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_grad(x: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + STEP;
            let up = f(&probe);
            probe.data_mut()[i] = orig - STEP;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

// Values bounded away from zero so no entry sits on the ReLU kink.
fn off_kink(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let mut t = uniform(rng, shape, 0.05, 1.0);
    t.data_mut().iter_mut().for_each(|v| {
        if rng.random_bool(0.5) {
            *v = -*v
        }
    });
    t
}

fn project(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// `(tensor name, relative error)` for each gradient of each layer.
pub fn layer_errors(seed: u64) -> Vec<(String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    for window in [3, 4] {
        let spec = ConvSpec::new(window, 3);
        let x = uniform(&mut rng, &[2, 11, 2], -1.0, 1.0);
        let w = uniform(&mut rng, &[window, 2, 3], -1.0, 1.0);
        let b = uniform(&mut rng, &[3], -1.0, 1.0);
        let (y, cache) = conv1d_forward(&x, spec, &w, &b).unwrap();
        let r = uniform(&mut rng, y.shape(), -1.0, 1.0);
        let g = conv1d_backward(&r, &cache, &w).unwrap();
        let nx = numeric_grad(&x, |x| project(&conv1d_forward(x, spec, &w, &b).unwrap().0, &r));
        let nw = numeric_grad(&w, |w| project(&conv1d_forward(&x, spec, w, &b).unwrap().0, &r));
        let nb = numeric_grad(&b, |b| project(&conv1d_forward(&x, spec, &w, b).unwrap().0, &r));
        out.push((format!("conv1d(k={window}) dx"), rel_err(g.x.data(), &nx)));
        out.push((format!("conv1d(k={window}) dw"), rel_err(g.w.data(), &nw)));
        out.push((format!("conv1d(k={window}) db"), rel_err(g.b.data(), &nb)));
    }

    {
        let x = uniform(&mut rng, &[2, 7, 3], -2.0, 2.0);
        let mut state = BatchNormState::new(3);
        state.gamma = uniform(&mut rng, &[3], 0.5, 1.5);
        state.beta = uniform(&mut rng, &[3], -0.5, 0.5);
        let (y, cache, _) = batchnorm_train(&x, &state).unwrap();
        let r = uniform(&mut rng, y.shape(), -1.0, 1.0);
        let (gx, ggamma, gbeta) = batchnorm_backward(&r, &cache).unwrap();
        let run = |x: &Tensor, s: &BatchNormState| project(&batchnorm_train(x, s).unwrap().0, &r);
        let nx = numeric_grad(&x, |x| run(x, &state));
        let ngamma = numeric_grad(&state.gamma, |g| {
            let s = BatchNormState {
                gamma: g.clone(),
                ..state.clone()
            };
            run(&x, &s)
        });
        let nbeta = numeric_grad(&state.beta, |b| {
            let s = BatchNormState {
                beta: b.clone(),
                ..state.clone()
            };
            run(&x, &s)
        });
        out.push(("batchnorm dx".into(), rel_err(gx.data(), &nx)));
        out.push(("batchnorm dgamma".into(), rel_err(ggamma.data(), &ngamma)));
        out.push(("batchnorm dbeta".into(), rel_err(gbeta.data(), &nbeta)));
    }

    {
        let x = off_kink(&mut rng, &[2, 6, 3]);
        let r = uniform(&mut rng, x.shape(), -1.0, 1.0);
        let g = relu_backward(&x, &r).unwrap();
        let n = numeric_grad(&x, |x| project(&relu(x), &r));
        out.push(("relu dx".into(), rel_err(g.data(), &n)));
    }

    {
        // Pairs differ by at least 0.05, far beyond the step.
        let mut x = uniform(&mut rng, &[2, 9, 2], -1.0, 1.0);
        let data = x.data_mut();
        for (i, v) in data.iter_mut().enumerate() {
            *v += 0.1 * (i % 7) as f64;
        }
        let (y, cache) = maxpool(&x).unwrap();
        let r = uniform(&mut rng, y.shape(), -1.0, 1.0);
        let g = maxpool_backward(&r, &cache).unwrap();
        let n = numeric_grad(&x, |x| project(&maxpool(x).unwrap().0, &r));
        out.push(("maxpool dx".into(), rel_err(g.data(), &n)));
    }

    {
        let x = uniform(&mut rng, &[2, 5, 3], -1.0, 1.0);
        let y = global_avg_pool(&x).unwrap();
        let r = uniform(&mut rng, y.shape(), -1.0, 1.0);
        let g = global_avg_pool_backward(&r, x.shape()).unwrap();
        let n = numeric_grad(&x, |x| project(&global_avg_pool(x).unwrap(), &r));
        out.push(("global_avg_pool dx".into(), rel_err(g.data(), &n)));
    }

    {
        let f = uniform(&mut rng, &[4, 6], -1.0, 1.0);
        let w = uniform(&mut rng, &[6, 2], -1.0, 1.0);
        let b = uniform(&mut rng, &[2], -0.5, 0.5);
        let labels = [Label::Hc, Label::Imi, Label::Imi, Label::Hc];
        let ce = |f: &Tensor, w: &Tensor, b: &Tensor| data_loss(&dense_softmax(f, w, b).unwrap(), &labels).unwrap();
        let probs = dense_softmax(&f, &w, &b).unwrap();
        let gp = loss_grad(&probs, &labels).unwrap();
        let gl = softmax_backward(&probs, &gp).unwrap();
        let (gf, gw, gb) = dense_backward(&gl, &f, &w).unwrap();
        let nf = numeric_grad(&f, |f| ce(f, &w, &b));
        let nw = numeric_grad(&w, |w| ce(&f, w, &b));
        let nb = numeric_grad(&b, |b| ce(&f, &w, b));
        out.push(("dense+softmax+ce dfeatures".into(), rel_err(gf.data(), &nf)));
        out.push(("dense+softmax+ce dw".into(), rel_err(gw.data(), &nw)));
        out.push(("dense+softmax+ce db".into(), rel_err(gb.data(), &nb)));
    }

    out
}

/// Analytic and numeric gradients of the full training loss (cross-entropy plus L2) of the default
/// architecture on a `[2, 3, 32]` batch, one entry per trainable tensor.
pub fn model_gradients(seed: u64) -> Vec<(String, Vec<f64>, Vec<f64>)> {
    const LAMBDA: f64 = 1e-3;
    let arch = Architecture::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(&arch, seed);
    for t in params.trainables_mut() {
        t.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
    }
    let x = uniform(&mut rng, &[2, 3, 32], -1.0, 1.0);
    let labels = [Label::Hc, Label::Imi];

    let train_loss = |p: &ModelParams| {
        let mut p = p.clone();
        let (out, _) = p.forward(&x, Mode::Train).unwrap();
        loss(&out.probs, &labels, &p.dense_w, LAMBDA).unwrap()
    };

    let mut probe = params.clone();
    let (out, cache) = probe.forward(&x, Mode::Train).unwrap();
    let grads = params
        .backward(&loss_grad(&out.probs, &labels).unwrap(), &cache.unwrap())
        .unwrap();
    let n_tensors = params.trainables().len();
    let dense_idx = n_tensors - 2;

    (0..n_tensors)
        .map(|ti| {
            let mut analytic = grads.tensors[ti].data().to_vec();
            if ti == dense_idx {
                for (g, w) in analytic.iter_mut().zip(params.dense_w.data()) {
                    *g += 2.0 * LAMBDA * w;
                }
            }
            let base = params.trainables()[ti].clone();
            let numeric = numeric_grad(&base, |t| {
                let mut p = params.clone();
                *p.trainables_mut()[ti] = t.clone();
                train_loss(&p)
            });
            (tensor_name(&arch, ti), analytic, numeric)
        })
        .collect()
}

pub fn model_errors(seed: u64) -> Vec<(String, f64)> {
    model_gradients(seed)
        .into_iter()
        .map(|(name, a, n)| {
            let e = rel_err(&a, &n);
            (name, e)
        })
        .collect()
}

fn tensor_name(arch: &Architecture, i: usize) -> String {
    const KINDS: [&str; 4] = ["conv_w", "conv_b", "gamma", "beta"];
    let per_lead = arch.windows.len() * 4;
    if i >= arch.n_leads * per_lead {
        return if i == arch.n_leads * per_lead {
            "dense_w"
        } else {
            "dense_b"
        }
        .into();
    }
    let (lead, rest) = (i / per_lead, i % per_lead);
    format!("lead{lead}/k{}/{}", arch.windows[rest / 4], KINDS[rest % 4])
}
