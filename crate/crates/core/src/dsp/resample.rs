//! Rational polyphase resampling with a Kaiser-windowed sinc low-pass.

use super::DspError;

const KAISER_BETA: f64 = 5.0;
const HALF_LEN_PER_RATE: usize = 10;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let y = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= y / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Low-pass prototype for up-by-`p`/down-by-`q`: cutoff `1/max(p, q)` of Nyquist at the
/// upsampled rate, `20 * max(p, q) + 1` taps. Each of the `p` polyphase branches is scaled to
/// unit DC gain.
pub fn design_filter(p: usize, q: usize) -> Vec<f64> {
    let max_rate = p.max(q);
    let half = HALF_LEN_PER_RATE * max_rate;
    let n = 2 * half + 1;
    let cutoff = 1.0 / max_rate as f64;
    let i0_beta = bessel_i0(KAISER_BETA);
    let mut h: Vec<f64> = (0..n)
        .map(|k| {
            let m = k as f64 - half as f64;
            let r = 2.0 * k as f64 / (n - 1) as f64 - 1.0;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            cutoff * sinc(cutoff * m) * w
        })
        .collect();
    for phase in 0..p {
        let s: f64 = h.iter().skip(phase).step_by(p).sum();
        if s != 0.0 {
            h.iter_mut().skip(phase).step_by(p).for_each(|v| *v /= s);
        }
    }
    h
}

/// Resamples `x` by the rational factor `p/q`. Output length is `ceil(len * p / q)`, time-aligned
/// with the input (filter delay removed).
pub fn resample(x: &[f64], p: usize, q: usize) -> Result<Vec<f64>, DspError> {
    if x.is_empty() {
        return Err(DspError::EmptyInput);
    }
    if p == 0 || q == 0 {
        return Err(DspError::BadRatio { p, q });
    }
    let g = gcd(p, q);
    let (p, q) = (p / g, q / g);
    if p == 1 && q == 1 {
        return Ok(x.to_vec());
    }

    let h = design_filter(p, q);
    let half = (h.len() - 1) / 2;
    let n_out = (x.len() * p).div_ceil(q);
    let last = x.len() - 1;

    let out = (0..n_out)
        .map(|m| {
            // y[m] = sum_n x[n] h[m q + half - n p]
            let pos = m * q + half;
            let n_hi = (pos / p).min(last);
            let n_lo = pos.saturating_sub(h.len() - 1).div_ceil(p);
            if n_lo > n_hi {
                return 0.0;
            }
            (n_lo..=n_hi).map(|n| x[n] * h[pos - n * p]).sum()
        })
        .collect();
    Ok(out)
}
