//! Discrimination, accuracy, calibration, interval-coverage and concordance
//! metrics.

use thiserror::Error;

use crate::bayes_logit::{self, NewtonOptions};
use crate::numerics::{self, Matrix};

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before logs and
/// logits.
pub const PROB_CLIP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("only one class present among labels")]
    SingleClass,
    #[error("length mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("predicted logits have zero variance")]
    DegenerateLogits,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn same_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::DimensionMismatch(a, b))
    }
}

fn check_probs(probs: &[f64]) -> Result<(), MetricsError> {
    match probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(MetricsError::InvalidInput(format!("probability {} at index {i} outside [0,1]", probs[i]))),
        None => Ok(()),
    }
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

/// Midranks (1-based) of `xs`; tied values share the average of their ranks.
fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve, i.e. the probability a random positive outscores
/// a random negative, with ties counted as one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    same_len(scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MetricsError::InvalidInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y).map(|(r, _)| r).sum();
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// ROC points `(fpr, tpr)` from the origin to `(1, 1)`, one step per distinct
/// score in decreasing order.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64)>, MetricsError> {
    same_len(scores.len(), labels.len())?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (k, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order.get(k + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_group {
            pts.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        }
    }
    Ok(pts)
}

pub fn brier(probs: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    same_len(probs.len(), labels.len())?;
    check_probs(probs)?;
    if probs.is_empty() {
        return Err(MetricsError::TooFewObservations { needed: 1, got: 0 });
    }
    let s: f64 = probs.iter().zip(labels).map(|(p, &y)| (p - f64::from(u8::from(y))).powi(2)).sum();
    Ok(s / probs.len() as f64)
}

/// Mean binary cross-entropy on probabilities clipped to
/// `[PROB_CLIP, 1 - PROB_CLIP]`.
pub fn log_loss(probs: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    same_len(probs.len(), labels.len())?;
    check_probs(probs)?;
    if probs.is_empty() {
        return Err(MetricsError::TooFewObservations { needed: 1, got: 0 });
    }
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = clip(p);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(s / probs.len() as f64)
}

/// Logistic recalibration coefficients `y ~ α₀ + α₁·logit(p)`. Perfect
/// calibration is `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub intercept: f64,
    pub slope: f64,
}

/// Unpenalized logistic fit of the labels on the clipped predicted logits.
pub fn calibration_fit(probs: &[f64], labels: &[bool]) -> Result<CalibrationFit, MetricsError> {
    same_len(probs.len(), labels.len())?;
    check_probs(probs)?;
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(MetricsError::SingleClass);
    }
    let logits: Vec<f64> = probs.iter().map(|&p| numerics::logit(clip(p))).collect();
    if logits.iter().all(|&l| l == logits[0]) {
        return Err(MetricsError::DegenerateLogits);
    }
    let x = Matrix::from_vec(logits.len(), 1, logits).expect("shape matches length");
    let fit = bayes_logit::fit_mle_xy(&x, labels, NewtonOptions::default()).map_err(|_| MetricsError::DegenerateLogits)?;
    Ok(CalibrationFit { intercept: fit.coef[0], slope: fit.coef[1] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecileRow {
    /// 1-based bin index, lowest predicted risk first.
    pub bin: usize,
    pub mean_predicted: f64,
    pub observed_proportion: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecileTable {
    pub rows: Vec<DecileRow>,
}

/// Rank-based deciles: observations sorted by predicted risk (stable), split
/// into ten contiguous bins whose sizes differ by at most one, larger bins
/// first.
pub fn decile_table(probs: &[f64], labels: &[bool]) -> Result<DecileTable, MetricsError> {
    same_len(probs.len(), labels.len())?;
    check_probs(probs)?;
    let n = probs.len();
    if n < 10 {
        return Err(MetricsError::TooFewObservations { needed: 10, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let (base, extra) = (n / 10, n % 10);
    let mut rows = Vec::with_capacity(10);
    let mut start = 0;
    for b in 0..10 {
        let size = base + usize::from(b < extra);
        let idx = &order[start..start + size];
        let k = size as f64;
        rows.push(DecileRow {
            bin: b + 1,
            mean_predicted: idx.iter().map(|&i| probs[i]).sum::<f64>() / k,
            observed_proportion: idx.iter().filter(|&&i| labels[i]).count() as f64 / k,
            n: size,
        });
        start += size;
    }
    Ok(DecileTable { rows })
}

/// Fraction of `truth[i]` inside the closed interval `[lower[i], upper[i]]`.
pub fn coverage(lower: &[f64], upper: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    same_len(lower.len(), upper.len())?;
    same_len(lower.len(), truth.len())?;
    if truth.is_empty() {
        return Err(MetricsError::TooFewObservations { needed: 1, got: 0 });
    }
    let hits = (0..truth.len()).filter(|&i| lower[i] <= truth[i] && truth[i] <= upper[i]).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fenwick tree of counts over compressed risk ranks.
struct Fenwick(Vec<u64>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Self(vec![0; n + 1])
    }

    fn add(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< rank`.
    fn below(&self, rank: usize) -> u64 {
        let mut i = rank;
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's concordance index. A pair is comparable when the subject with
/// the strictly earlier time had an event; it is concordant when that subject
/// also has the strictly higher risk, and tied risks earn half credit.
/// Runs in `O(n log n)`.
pub fn c_index(risk: &[f64], time: &[f64], event: &[bool]) -> Result<f64, MetricsError> {
    same_len(risk.len(), time.len())?;
    same_len(risk.len(), event.len())?;
    if risk.iter().chain(time).any(|v| v.is_nan()) {
        return Err(MetricsError::InvalidInput("NaN risk or time".into()));
    }
    let n = risk.len();
    let mut levels = risk.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let rank = |r: f64| levels.partition_point(|&l| l < r);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
    let mut tree = Fenwick::new(levels.len());
    let (mut inserted, mut comparable, mut score2) = (0u64, 0u64, 0u64);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && time[order[end]] == time[order[start]] {
            end += 1;
        }
        // the tree holds exactly the subjects with strictly later times
        for &i in &order[start..end] {
            if event[i] {
                let r = rank(risk[i]);
                let lower = tree.below(r);
                let tied = tree.below(r + 1) - lower;
                comparable += inserted;
                score2 += 2 * lower + tied;
            }
        }
        for &i in &order[start..end] {
            tree.add(rank(risk[i]));
            inserted += 1;
        }
        start = end;
    }
    if comparable == 0 {
        return Err(MetricsError::NoComparablePairs);
    }
    Ok(score2 as f64 / (2 * comparable) as f64)
}

/// One row of the per-method metric tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub auc: f64,
    pub brier: f64,
    pub log_loss: f64,
    pub calib_intercept: f64,
    pub calib_slope: f64,
    pub coverage: Option<f64>,
}

impl MetricRecord {
    pub fn evaluate(probs: &[f64], labels: &[bool], coverage: Option<f64>) -> Result<Self, MetricsError> {
        let cal = calibration_fit(probs, labels)?;
        Ok(Self {
            auc: auc(probs, labels)?,
            brier: brier(probs, labels)?,
            log_loss: log_loss(probs, labels)?,
            calib_intercept: cal.intercept,
            calib_slope: cal.slope,
            coverage,
        })
    }
}
