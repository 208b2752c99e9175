use super::{NnError, Tensor};

/// `logits = features · w + b` for `features: [B, D]`, `w: [D, K]`, `b: [K]`.
pub fn dense_forward(features: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    let (rows, d) = features.rows_cols()?;
    let k = b.len();
    w.expect_shape(&[d, k], "dense weights")?;
    let wd = w.data();
    let mut out = Vec::with_capacity(rows * k);
    for r in 0..rows {
        let f = &features.data()[r * d..(r + 1) * d];
        for j in 0..k {
            let s: f64 = f.iter().enumerate().map(|(i, v)| v * wd[i * k + j]).sum();
            out.push(s + b.data()[j]);
        }
    }
    let shape: Vec<usize> = if features.rank() == 1 { vec![k] } else { vec![rows, k] };
    Tensor::from_vec(&shape, out)
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor, NnError> {
    let (_, k) = logits.rows_cols()?;
    let mut out = logits.data().to_vec();
    for row in out.chunks_exact_mut(k) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    Tensor::from_vec(logits.shape(), out)
}

/// `dL/dlogits_i = p_i (g_i - sum_j p_j g_j)` per row.
pub fn softmax_backward(probs: &Tensor, grad_probs: &Tensor) -> Result<Tensor, NnError> {
    grad_probs.expect_shape(probs.shape(), "softmax grad")?;
    let (_, k) = probs.rows_cols()?;
    let mut out = Vec::with_capacity(probs.len());
    for (p, g) in probs.data().chunks_exact(k).zip(grad_probs.data().chunks_exact(k)) {
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        out.extend(p.iter().zip(g).map(|(pi, gi)| pi * (gi - dot)));
    }
    Tensor::from_vec(probs.shape(), out)
}

/// Gradients `(features, w, b)` of [`dense_forward`].
pub fn dense_backward(
    grad_logits: &Tensor,
    features: &Tensor,
    w: &Tensor,
) -> Result<(Tensor, Tensor, Tensor), NnError> {
    let (rows, d) = features.rows_cols()?;
    let k = w.shape().get(1).copied().unwrap_or(0);
    w.expect_shape(&[d, k], "dense weights")?;
    if grad_logits.len() != rows * k {
        return Err(NnError::ShapeMismatch(format!(
            "dense grad has {} values, expected {}",
            grad_logits.len(),
            rows * k
        )));
    }
    let wd = w.data();
    let mut gf = vec![0.0; rows * d];
    let mut gw = vec![0.0; d * k];
    let mut gb = vec![0.0; k];
    for r in 0..rows {
        let g = &grad_logits.data()[r * k..(r + 1) * k];
        let f = &features.data()[r * d..(r + 1) * d];
        for (j, gj) in g.iter().enumerate() {
            gb[j] += gj;
        }
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..k {
                gw[i * k + j] += f[i] * g[j];
                acc += wd[i * k + j] * g[j];
            }
            gf[r * d + i] = acc;
        }
    }
    Ok((
        Tensor::from_vec(features.shape(), gf)?,
        Tensor::from_vec(&[d, k], gw)?,
        Tensor::from_vec(&[k], gb)?,
    ))
}

/// Dense layer followed by softmax.
pub fn dense_softmax(features: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    softmax(&dense_forward(features, w, b)?)
}
