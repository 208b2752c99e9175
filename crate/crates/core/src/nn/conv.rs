//! Stride-1 "same" 1-D convolution over `[B, L, C]` tensors.

use super::{NnError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub window: usize,
    pub n_filters: usize,
}

impl ConvSpec {
    pub fn new(window: usize, n_filters: usize) -> Self {
        Self { window, n_filters }
    }

    /// Zero samples before the signal; the extra sample of an even window goes on the right.
    pub fn pad_left(&self) -> usize {
        (self.window - 1) / 2
    }

    pub fn pad_right(&self) -> usize {
        self.window - 1 - self.pad_left()
    }
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    x: Tensor,
    spec: ConvSpec,
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub x: Tensor,
    pub w: Tensor,
    pub b: Tensor,
}

fn check(x: &Tensor, spec: ConvSpec, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize), NnError> {
    let (bsz, l, c) = x.blc()?;
    if spec.window == 0 || l == 0 {
        return Err(NnError::ShapeMismatch("empty convolution input or window".into()));
    }
    w.expect_shape(&[spec.window, c, spec.n_filters], "conv weights")?;
    b.expect_shape(&[spec.n_filters], "conv bias")?;
    Ok((bsz, l, c))
}

// Range of kernel taps k with 0 <= t + k - pad_left < l.
fn taps(t: usize, l: usize, spec: ConvSpec) -> std::ops::Range<usize> {
    let pl = spec.pad_left();
    let lo = pl.saturating_sub(t);
    let hi = (l + pl - t).min(spec.window);
    lo..hi
}

/// `out[t, f] = b[f] + sum_{k, c} w[k, c, f] * x_padded[t + k, c]`; output length equals input length.
pub fn conv1d_forward(x: &Tensor, spec: ConvSpec, w: &Tensor, b: &Tensor) -> Result<(Tensor, ConvCache), NnError> {
    let (bsz, l, c) = check(x, spec, w, b)?;
    let f = spec.n_filters;
    let pl = spec.pad_left();
    let xd = x.data();
    let wd = w.data();
    let mut out = vec![0.0; bsz * l * f];
    for bi in 0..bsz {
        let xs = &xd[bi * l * c..(bi + 1) * l * c];
        for t in 0..l {
            let o = &mut out[(bi * l + t) * f..(bi * l + t + 1) * f];
            o.copy_from_slice(b.data());
            for k in taps(t, l, spec) {
                let s = t + k - pl;
                for ci in 0..c {
                    let xv = xs[s * c + ci];
                    let wrow = &wd[(k * c + ci) * f..(k * c + ci + 1) * f];
                    for (ov, wv) in o.iter_mut().zip(wrow) {
                        *ov += wv * xv;
                    }
                }
            }
        }
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().expect("rank >= 2") = f;
    let out = Tensor::from_vec(&shape, out)?;
    Ok((out, ConvCache { x: x.clone(), spec }))
}

/// Exact gradients of [`conv1d_forward`].
pub fn conv1d_backward(grad_out: &Tensor, cache: &ConvCache, w: &Tensor) -> Result<ConvGrads, NnError> {
    let (gw, gb, gx) = backward_impl(grad_out, cache, w, true)?;
    Ok(ConvGrads {
        x: gx.expect("requested"),
        w: gw,
        b: gb,
    })
}

/// Parameter gradients only, for layers fed directly by the model input.
pub(crate) fn conv1d_backward_params(
    grad_out: &Tensor,
    cache: &ConvCache,
    w: &Tensor,
) -> Result<(Tensor, Tensor), NnError> {
    let (gw, gb, _) = backward_impl(grad_out, cache, w, false)?;
    Ok((gw, gb))
}

fn backward_impl(
    grad_out: &Tensor,
    cache: &ConvCache,
    w: &Tensor,
    want_x: bool,
) -> Result<(Tensor, Tensor, Option<Tensor>), NnError> {
    let spec = cache.spec;
    let x = &cache.x;
    let (bsz, l, c) = x.blc()?;
    let f = spec.n_filters;
    w.expect_shape(&[spec.window, c, f], "conv weights")?;
    let mut out_shape = x.shape().to_vec();
    *out_shape.last_mut().expect("rank >= 2") = f;
    grad_out.expect_shape(&out_shape, "conv grad_out")?;

    let pl = spec.pad_left();
    let xd = x.data();
    let wd = w.data();
    let gd = grad_out.data();
    let mut gw = vec![0.0; w.len()];
    let mut gb = vec![0.0; f];
    let mut gx = if want_x { vec![0.0; x.len()] } else { Vec::new() };

    for bi in 0..bsz {
        for t in 0..l {
            let g = &gd[(bi * l + t) * f..(bi * l + t + 1) * f];
            for (acc, gv) in gb.iter_mut().zip(g) {
                *acc += gv;
            }
            for k in taps(t, l, spec) {
                let s = (bi * l + t + k - pl) * c;
                for ci in 0..c {
                    let xv = xd[s + ci];
                    let base = (k * c + ci) * f;
                    let gwrow = &mut gw[base..base + f];
                    for (acc, gv) in gwrow.iter_mut().zip(g) {
                        *acc += gv * xv;
                    }
                    if want_x {
                        let wrow = &wd[base..base + f];
                        gx[s + ci] += wrow.iter().zip(g).map(|(wv, gv)| wv * gv).sum::<f64>();
                    }
                }
            }
        }
    }
    let gx = if want_x {
        Some(Tensor::from_vec(x.shape(), gx)?)
    } else {
        None
    };
    Ok((Tensor::from_vec(w.shape(), gw)?, Tensor::from_vec(&[f], gb)?, gx))
}
