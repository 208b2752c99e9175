use super::{NnError, Tensor};

pub const POOL_WINDOW: usize = 2;
pub const POOL_STRIDE: usize = 2;

#[derive(Debug, Clone)]
pub struct PoolCache {
    in_shape: Vec<usize>,
    argmax: Vec<usize>,
}

/// Max pooling with window 2 and stride 2 along the length axis.
pub fn maxpool(x: &Tensor) -> Result<(Tensor, PoolCache), NnError> {
    maxpool_with(x, POOL_WINDOW, POOL_STRIDE)
}

/// Incomplete trailing windows are dropped; ties resolve to the earliest position.
pub fn maxpool_with(x: &Tensor, window: usize, stride: usize) -> Result<(Tensor, PoolCache), NnError> {
    let (b, l, c) = x.blc()?;
    if window == 0 || stride == 0 {
        return Err(NnError::ShapeMismatch("pool window and stride must be positive".into()));
    }
    let lo = if l >= window { (l - window) / stride + 1 } else { 0 };
    let xd = x.data();
    let mut out = Vec::with_capacity(b * lo * c);
    let mut argmax = Vec::with_capacity(b * lo * c);
    for bi in 0..b {
        for t in 0..lo {
            for ch in 0..c {
                let mut best = (bi * l + t * stride) * c + ch;
                for k in 1..window {
                    let idx = (bi * l + t * stride + k) * c + ch;
                    if xd[idx] > xd[best] {
                        best = idx;
                    }
                }
                out.push(xd[best]);
                argmax.push(best);
            }
        }
    }
    let mut shape = x.shape().to_vec();
    let len_axis = shape.len() - 2;
    shape[len_axis] = lo;
    Ok((
        Tensor::from_vec(&shape, out)?,
        PoolCache {
            in_shape: x.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool_backward(grad: &Tensor, cache: &PoolCache) -> Result<Tensor, NnError> {
    if grad.len() != cache.argmax.len() {
        return Err(NnError::ShapeMismatch(format!(
            "pool grad has {} values, forward produced {}",
            grad.len(),
            cache.argmax.len()
        )));
    }
    let mut gx = Tensor::zeros(&cache.in_shape);
    let gd = gx.data_mut();
    for (&idx, &g) in cache.argmax.iter().zip(grad.data()) {
        gd[idx] += g;
    }
    Ok(gx)
}

/// Mean over the length axis: `[B, L, C] -> [B, C]` (or `[L, C] -> [C]`).
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor, NnError> {
    let (b, l, c) = x.blc()?;
    if l == 0 {
        return Err(NnError::ShapeMismatch("global pooling over empty length".into()));
    }
    let mut out = vec![0.0; b * c];
    for (bi, sample) in x.data().chunks_exact(l * c).enumerate() {
        let o = &mut out[bi * c..(bi + 1) * c];
        for row in sample.chunks_exact(c) {
            for (acc, v) in o.iter_mut().zip(row) {
                *acc += v;
            }
        }
        o.iter_mut().for_each(|v| *v /= l as f64);
    }
    let shape: Vec<usize> = if x.rank() == 2 { vec![c] } else { vec![b, c] };
    Tensor::from_vec(&shape, out)
}

/// Spreads `grad / L` uniformly over the pooled length.
pub fn global_avg_pool_backward(grad: &Tensor, in_shape: &[usize]) -> Result<Tensor, NnError> {
    let (b, l, c) = match *in_shape {
        [l, c] => (1, l, c),
        [b, l, c] => (b, l, c),
        _ => return Err(NnError::ShapeMismatch(format!("bad pooled input shape {in_shape:?}"))),
    };
    if grad.len() != b * c {
        return Err(NnError::ShapeMismatch(format!(
            "global pool grad has {} values, expected {}",
            grad.len(),
            b * c
        )));
    }
    let mut out = Vec::with_capacity(b * l * c);
    for bi in 0..b {
        let g = &grad.data()[bi * c..(bi + 1) * c];
        for _ in 0..l {
            out.extend(g.iter().map(|v| v / l as f64));
        }
    }
    Tensor::from_vec(in_shape, out)
}
