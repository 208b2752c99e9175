//! Independent reference implementations: normal-equation Savitzky-Golay weights, full
//! distance-matrix GSI, ordered-pair intra-class distance.

#![allow(dead_code)]

use imicnn_core::dsp::{remove_baseline, savgol, savgol_kernel};
use imicnn_core::featquality::{gsi, intra_class_distance, FeatureSet};
use imicnn_core::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            row.iter_mut().zip(pivot_row).skip(col).for_each(|(v, p)| *v -= f * p);
            b[col + 1 + offset] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Center weights `e0' (A'A)^-1 A'` with `A[j][k] = (j - frame/2)^k`.
pub fn sg_kernel_normal_equations(order: usize, frame: usize) -> Vec<f64> {
    let h = (frame / 2) as f64;
    let a: Vec<Vec<f64>> = (0..frame)
        .map(|j| (0..=order).map(|k| (j as f64 - h).powi(k as i32)).collect())
        .collect();
    let ata: Vec<Vec<f64>> = (0..=order)
        .map(|r| {
            (0..=order)
                .map(|c| (0..frame).map(|j| a[j][r] * a[j][c]).sum())
                .collect()
        })
        .collect();
    let mut e0 = vec![0.0; order + 1];
    e0[0] = 1.0;
    let z = solve(ata, e0);
    a.iter()
        .map(|row| row.iter().zip(&z).map(|(x, y)| x * y).sum())
        .collect()
}

pub struct SgReport {
    pub cubic_max_err: f64,
    pub kernel5_max_err: f64,
    pub kernel5_oracle_max_err: f64,
    pub kernel15_oracle_max_err: f64,
}

pub fn savgol_checks(seed: u64) -> SgReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cubic_max_err: f64 = 0.0;
    for n in [15, 16, 17, 40, 257] {
        for _ in 0..10 {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let u = i as f64 / n as f64 - 0.5;
                    c[0] + c[1] * u + c[2] * u * u + c[3] * u * u * u
                })
                .collect();
            let y = savgol(&x, 3, 15).unwrap();
            for (a, b) in x.iter().zip(&y) {
                cubic_max_err = cubic_max_err.max((a - b).abs());
            }
        }
    }
    let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
    let k5 = savgol_kernel(2, 5).unwrap();
    let o5 = sg_kernel_normal_equations(2, 5);
    let k15 = savgol_kernel(3, 15).unwrap();
    let o15 = sg_kernel_normal_equations(3, 15);
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    SgReport {
        cubic_max_err,
        kernel5_max_err: max_diff(&k5, &expected),
        kernel5_oracle_max_err: max_diff(&o5, &expected),
        kernel15_oracle_max_err: max_diff(&k15, &o15),
    }
}

pub struct MedianReport {
    /// Largest |output| over all constant inputs.
    pub constant_max_abs: f64,
    /// Largest |output| on ramps, at least `(w1 + w2) / 2` samples from either end.
    pub ramp_interior_max_abs: f64,
}

pub fn median_checks(seed: u64, w1: usize, w2: usize) -> MedianReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = (w1 + w2) / 2;
    let mut constant_max_abs: f64 = 0.0;
    let mut ramp_interior_max_abs: f64 = 0.0;
    for n in [1, 10, w1, w2 + 3, 1000, 2500] {
        let c = rng.random_range(-5.0..5.0);
        let y = remove_baseline(&vec![c; n], w1, w2).unwrap();
        constant_max_abs = y.iter().fold(constant_max_abs, |m, v| m.max(v.abs()));

        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-0.1..0.1));
        let ramp: Vec<f64> = (0..n).map(|i| a + b * i as f64).collect();
        let y = remove_baseline(&ramp, w1, w2).unwrap();
        if n > 2 * margin {
            for v in &y[margin..n - margin] {
                ramp_interior_max_abs = ramp_interior_max_abs.max(v.abs());
            }
        }
    }
    MedianReport {
        constant_max_abs,
        ramp_interior_max_abs,
    }
}

pub fn random_features(seed: u64, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Imi } else { Label::Hc })
        .collect();
    (vectors, labels)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn gsi_brute(vectors: &[Vec<f64>], labels: &[Label]) -> f64 {
    let n = vectors.len();
    let d: Vec<Vec<f64>> = vectors
        .iter()
        .map(|a| vectors.iter().map(|b| euclid(a, b)).collect())
        .collect();
    let mut same = 0;
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&p, &q| d[i][p].total_cmp(&d[i][q]).then(p.cmp(&q)));
        if labels[others[0]] == labels[i] {
            same += 1;
        }
    }
    same as f64 / n as f64
}

pub fn intra_brute(vectors: &[Vec<f64>], labels: &[Label], class: Label) -> f64 {
    let members: Vec<&Vec<f64>> = vectors
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == class)
        .map(|(v, _)| v)
        .collect();
    let n = members.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += euclid(members[i], members[j]);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Random orthogonal map built from Householder reflections.
fn random_isometry(rng: &mut ChaCha8Rng, dim: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    let reflectors: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
    move |x: &[f64]| {
        let mut y = x.to_vec();
        for v in &reflectors {
            let d: f64 = y.iter().zip(v).map(|(a, b)| a * b).sum();
            y.iter_mut().zip(v).for_each(|(a, b)| *a -= 2.0 * d * b);
        }
        y.iter().zip(&shift).map(|(a, s)| a + s).collect()
    }
}

#[derive(Debug, Default)]
pub struct FeatReport {
    pub gsi_max_diff: f64,
    pub intra_max_diff: f64,
    pub gsi_isometry_max_diff: f64,
    pub gsi_scale_max_diff: f64,
    pub intra_scale_max_rel_diff: f64,
}

pub fn featquality_checks(seeds: std::ops::Range<u64>, n: usize, dim: usize) -> FeatReport {
    let mut r = FeatReport::default();
    for seed in seeds {
        let (vectors, labels) = random_features(seed, n, dim);
        let fs = FeatureSet::new(vectors.clone(), labels.clone()).unwrap();
        let g = gsi(&fs).unwrap();
        r.gsi_max_diff = r.gsi_max_diff.max((g - gsi_brute(&vectors, &labels)).abs());
        for class in [Label::Hc, Label::Imi] {
            let d = intra_class_distance(&fs, class).unwrap();
            r.intra_max_diff = r.intra_max_diff.max((d - intra_brute(&vectors, &labels, class)).abs());
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let iso = random_isometry(&mut rng, dim);
        let moved = FeatureSet::new(vectors.iter().map(|v| iso(v)).collect(), labels.clone()).unwrap();
        r.gsi_isometry_max_diff = r.gsi_isometry_max_diff.max((gsi(&moved).unwrap() - g).abs());

        let k = rng.random_range(0.01..100.0);
        let scaled = FeatureSet::new(
            vectors.iter().map(|v| v.iter().map(|x| k * x).collect()).collect(),
            labels.clone(),
        )
        .unwrap();
        r.gsi_scale_max_diff = r.gsi_scale_max_diff.max((gsi(&scaled).unwrap() - g).abs());
        for class in [Label::Hc, Label::Imi] {
            let a = intra_class_distance(&scaled, class).unwrap();
            let b = k * intra_class_distance(&fs, class).unwrap();
            r.intra_scale_max_rel_diff = r.intra_scale_max_rel_diff.max((a - b).abs() / b);
        }
    }
    r
}
