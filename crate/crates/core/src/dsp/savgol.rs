//! Savitzky-Golay smoothing by local least-squares polynomial fits.

use nalgebra::{DMatrix, DVector};

use super::DspError;

/// Weights that evaluate, at sample `target` of a `len`-sample window, the least-squares
/// polynomial of degree `order` fitted to the window.
pub fn fit_weights(order: usize, len: usize, target: usize) -> Vec<f64> {
    let order = order.min(len - 1);
    let scale = (len.max(2) - 1) as f64 / 2.0;
    let v = DMatrix::from_fn(len, order + 1, |j, k| {
        let u = (j as f64 - target as f64) / scale;
        u.powi(k as i32)
    });
    // p(0) = e0' (V'V)^-1 V' y = e0' R^-1 Q' y
    let qr = v.qr();
    let r = qr.r();
    let mut e0 = DVector::zeros(order + 1);
    e0[0] = 1.0;
    let z = r
        .transpose()
        .solve_lower_triangular(&e0)
        .expect("Vandermonde on distinct nodes has full column rank");
    (qr.q() * z).iter().copied().collect()
}

/// Interior (centered) smoothing kernel.
pub fn savgol_kernel(order: usize, frame: usize) -> Result<Vec<f64>, DspError> {
    check(order, frame)?;
    Ok(fit_weights(order, frame, frame / 2))
}

fn check(order: usize, frame: usize) -> Result<(), DspError> {
    if frame % 2 == 0 || frame <= order {
        Err(DspError::BadFrame { order, frame })
    } else {
        Ok(())
    }
}

/// Smooths `x`; the first and last `frame / 2` samples are fitted on the nearest full frame.
pub fn savgol(x: &[f64], order: usize, frame: usize) -> Result<Vec<f64>, DspError> {
    check(order, frame)?;
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n < frame {
        return Ok((0..n).map(|i| dot(&fit_weights(order, n, i), x)).collect());
    }

    let half = frame / 2;
    let center = fit_weights(order, frame, half);
    let mut out = vec![0.0; n];
    for i in 0..half {
        let w = fit_weights(order, frame, i);
        out[i] = dot(&w, &x[..frame]);
        let w_end = fit_weights(order, frame, frame - 1 - i);
        out[n - 1 - i] = dot(&w_end, &x[n - frame..]);
    }
    for i in half..n - half {
        out[i] = dot(&center, &x[i - half..=i + half]);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
