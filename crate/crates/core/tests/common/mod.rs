#![allow(dead_code)]

use bayes_epi::datagen::{LabeledDataset, SurvivalData};
use bayes_epi::numerics::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(r: &mut impl Rng, n: usize, p: usize) -> Matrix {
    let data = (0..n * p).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(n, p, data).unwrap()
}

/// Logistic data with `coef = (intercept, slopes…)`.
pub fn logistic_data(r: &mut impl Rng, n: usize, coef: &[f64]) -> LabeledDataset {
    let x = normal_matrix(r, n, coef.len() - 1);
    let y = (0..n)
        .map(|i| {
            let eta = coef[0] + x.row(i).iter().zip(&coef[1..]).map(|(a, b)| a * b).sum::<f64>();
            r.random::<f64>() < 1.0 / (1.0 + (-eta).exp())
        })
        .collect();
    LabeledDataset::new(x, y, None).unwrap()
}

/// Exponential event and censoring times with log-hazard `xᵀβ`.
pub fn survival_data(r: &mut impl Rng, n: usize, beta: &[f64], censor_rate: f64) -> SurvivalData {
    let x = normal_matrix(r, n, beta.len());
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for i in 0..n {
        let rate = 0.1 * x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp();
        let t = -(1.0 - r.random::<f64>()).ln() / rate;
        let c = if censor_rate > 0.0 { -(1.0 - r.random::<f64>()).ln() / censor_rate } else { f64::INFINITY };
        time.push(t.min(c));
        event.push(t <= c);
    }
    if !event.iter().any(|&e| e) {
        event[0] = true;
    }
    SurvivalData::new(x, time, event, None).unwrap()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − b‖ / max(‖b‖, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b).max(1.0)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[j] += h;
            b[j] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Naive pair-counting AUC.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                den += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// Naive Harrell C: a pair is comparable when the shorter time is an event;
/// higher risk should go with the shorter time. `None` without comparable pairs.
pub fn brute_c_index(risk: &[f64], time: &[f64], event: &[bool]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..risk.len() {
        for j in 0..risk.len() {
            if event[i] && time[i] < time[j] {
                den += 1.0;
                if risk[i] > risk[j] {
                    num += 1.0;
                } else if risk[i] == risk[j] {
                    num += 0.5;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}
