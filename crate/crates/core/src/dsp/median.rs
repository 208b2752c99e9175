use super::DspError;

fn check_window(w: usize) -> Result<(), DspError> {
    if w == 0 || w % 2 == 0 {
        Err(DspError::EvenWindow(w))
    } else {
        Ok(())
    }
}

/// Centered running median of odd width `w`. The window shrinks at the boundaries;
/// even-sized windows take the lower median.
pub fn median_filter(x: &[f64], w: usize) -> Result<Vec<f64>, DspError> {
    check_window(w)?;
    let n = x.len();
    let half = w / 2;
    let mut window: Vec<f64> = Vec::with_capacity(w);
    let mut out = Vec::with_capacity(n);

    let insert = |window: &mut Vec<f64>, v: f64| {
        let at = window.partition_point(|e| e.total_cmp(&v).is_lt());
        window.insert(at, v);
    };

    for &v in x.iter().take(half.min(n)) {
        insert(&mut window, v);
    }
    for i in 0..n {
        if i + half < n {
            insert(&mut window, x[i + half]);
        }
        if i > half {
            let old = x[i - half - 1];
            let at = window.partition_point(|e| e.total_cmp(&old).is_lt());
            window.remove(at);
        }
        out.push(window[(window.len() - 1) / 2]);
    }
    Ok(out)
}

/// Subtracts the two-stage median baseline `median(median(x, w1), w2)`.
pub fn remove_baseline(x: &[f64], w1: usize, w2: usize) -> Result<Vec<f64>, DspError> {
    check_window(w1)?;
    check_window(w2)?;
    let baseline = median_filter(&median_filter(x, w1)?, w2)?;
    Ok(x.iter().zip(baseline).map(|(v, b)| v - b).collect())
}
