//! Elastic-net penalized Cox proportional hazards.
//!
//! The fitted objective is
//! `NLL(β)/n + λ·(α‖β‖₁ + (1−α)‖β‖²/2)` on internally standardized
//! covariates, where `NLL` is the Breslow negative log partial likelihood.
//! Fits use proximal Newton steps: an outer quadratic model of the partial
//! likelihood, minimized with cyclic coordinate descent and soft
//! thresholding, then a backtracking line search on the full objective.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::datagen::SurvivalData;
use crate::metrics::{self, MetricsError};
use crate::numerics::{self, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoxError {
    #[error("no events in the data")]
    NoEvents,
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not draw folds with events in every split after {attempts} attempts")]
    FoldWithoutEvents { attempts: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxFitConfig {
    pub lambda: f64,
    pub alpha: f64,
    /// Outer Newton iterations.
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of a full Newton step.
    pub tol: f64,
}

impl CoxFitConfig {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self, CoxError> {
        let cfg = Self { lambda, alpha, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CoxError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(CoxError::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CoxError::InvalidConfig(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(CoxError::InvalidConfig("max_iter and tol must be positive".into()));
        }
        Ok(())
    }

    fn penalty(&self, beta: &[f64]) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        let l2: f64 = beta.iter().map(|b| b * b).sum();
        self.lambda * (self.alpha * l1 + 0.5 * (1.0 - self.alpha) * l2)
    }
}

impl Default for CoxFitConfig {
    fn default() -> Self {
        Self { lambda: 0.0, alpha: 1.0, max_iter: 50, tol: 1e-9 }
    }
}

/// Column centering and scaling to unit population variance. Constant
/// columns keep scale 1 and so become all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    center: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let mut center = vec![0.0; x.cols()];
        let mut scale = vec![1.0; x.cols()];
        for j in 0..x.cols() {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            center[j] = m;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        Self { center, scale }
    }

    pub fn identity(p: usize) -> Self {
        Self { center: vec![0.0; p], scale: vec![1.0; p] }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix, CoxError> {
        if x.cols() != self.center.len() {
            return Err(CoxError::DimensionMismatch { expected: self.center.len(), got: x.cols() });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.center[j]) / self.scale[j];
            }
        }
        Ok(out)
    }
}

/// Precomputed view of a survival dataset: design plus subjects ordered by
/// decreasing time, grouped by tied times.
struct CoxProblem {
    x: Matrix,
    event: Vec<bool>,
    order: Vec<usize>,
    /// `[start, end)` ranges into `order` sharing one time.
    groups: Vec<(usize, usize)>,
}

impl CoxProblem {
    fn new(x: Matrix, time: &[f64], event: &[bool]) -> Result<Self, CoxError> {
        if !event.iter().any(|&e| e) {
            return Err(CoxError::NoEvents);
        }
        let n = time.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
        let mut groups = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && time[order[end]] == time[order[start]] {
                end += 1;
            }
            groups.push((start, end));
            start = end;
        }
        Ok(Self { x, event: event.to_vec(), order, groups })
    }

    fn n(&self) -> usize {
        self.event.len()
    }

    fn p(&self) -> usize {
        self.x.cols()
    }

    /// Breslow negative log partial likelihood, gradient and (optionally)
    /// Hessian, in one pass over decreasing times. Linear predictors are
    /// shifted by their maximum so the exponentials cannot overflow.
    fn eval(&self, beta: &[f64], want_hessian: bool) -> (f64, Vec<f64>, Option<Matrix>) {
        let p = self.p();
        let eta: Vec<f64> = (0..self.n()).map(|i| numerics::dot(self.x.row(i), beta)).collect();
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = if want_hessian { Some(Matrix::zeros(p, p)) } else { None };
        let mut value = 0.0;
        let mut grad = vec![0.0; p];
        let mut hess = if want_hessian { Some(Matrix::zeros(p, p)) } else { None };
        for &(start, end) in &self.groups {
            let members = &self.order[start..end];
            for &i in members {
                let xi = self.x.row(i);
                s0 += w[i];
                for (a, s) in s1.iter_mut().enumerate() {
                    *s += w[i] * xi[a];
                }
                if let Some(s2) = s2.as_mut() {
                    for a in 0..p {
                        for b in 0..=a {
                            s2[(a, b)] += w[i] * xi[a] * xi[b];
                        }
                    }
                }
            }
            let d = members.iter().filter(|&&i| self.event[i]).count();
            if d == 0 {
                continue;
            }
            let df = d as f64;
            value += df * (s0.ln() + shift);
            for &i in members.iter().filter(|&&i| self.event[i]) {
                value -= eta[i];
                for (g, xij) in grad.iter_mut().zip(self.x.row(i)) {
                    *g -= xij;
                }
            }
            for (g, s) in grad.iter_mut().zip(&s1) {
                *g += df * s / s0;
            }
            if let (Some(h), Some(s2)) = (hess.as_mut(), s2.as_ref()) {
                for a in 0..p {
                    for b in 0..=a {
                        h[(a, b)] += df * (s2[(a, b)] / s0 - s1[a] * s1[b] / (s0 * s0));
                    }
                }
            }
        }
        if let Some(h) = hess.as_mut() {
            for a in 0..p {
                for b in 0..a {
                    h[(b, a)] = h[(a, b)];
                }
            }
        }
        (value, grad, hess)
    }
}

/// Breslow negative log partial likelihood and its gradient, on the
/// covariates as given (no standardization).
pub fn cox_neg_log_plik(beta: &[f64], data: &SurvivalData) -> Result<(f64, Vec<f64>), CoxError> {
    if beta.len() != data.p() {
        return Err(CoxError::DimensionMismatch { expected: data.p(), got: beta.len() });
    }
    let prob = CoxProblem::new(data.x().clone(), data.time(), data.event())?;
    let (v, g, _) = prob.eval(beta, false);
    Ok((v, g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    /// Coefficients on the standardized covariate scale.
    pub beta: Vec<f64>,
    pub config: CoxFitConfig,
    pub converged: bool,
    pub iterations: usize,
    pub active_set_size: usize,
    /// Penalized objective at `beta`.
    pub objective: f64,
    pub standardizer: Standardizer,
}

impl CoxFit {
    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }
}

fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

fn objective(prob: &CoxProblem, cfg: &CoxFitConfig, beta: &[f64]) -> f64 {
    prob.eval(beta, false).0 / prob.n() as f64 + cfg.penalty(beta)
}

const INNER_SWEEPS: usize = 1000;
const INNER_TOL: f64 = 1e-13;
const MAX_BACKTRACKS: usize = 30;

/// Proximal Newton from `init`. Never errors on non-convergence; the last
/// iterate is returned with `converged = false`.
fn fit_problem(prob: &CoxProblem, cfg: &CoxFitConfig, init: &[f64]) -> (Vec<f64>, bool, usize, f64) {
    let p = prob.p();
    let n = prob.n() as f64;
    let (l1, l2) = (cfg.lambda * cfg.alpha, cfg.lambda * (1.0 - cfg.alpha));
    let mut beta = init.to_vec();
    let mut f = objective(prob, cfg, &beta);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let (_, mut g, h) = prob.eval(&beta, true);
        let mut h = h.expect("hessian requested");
        for v in g.iter_mut() {
            *v /= n;
        }
        for i in 0..p {
            for v in h.row_mut(i) {
                *v /= n;
            }
        }
        // coordinate descent on the penalized quadratic model around beta
        let mut b = beta.clone();
        let mut hd = vec![0.0; p];
        for _ in 0..INNER_SWEEPS {
            let mut max_change: f64 = 0.0;
            for j in 0..p {
                let hjj = h[(j, j)];
                let denom = hjj + l2;
                if denom <= 0.0 {
                    continue;
                }
                let u = hjj * b[j] - (g[j] + hd[j]);
                let new = soft_threshold(u, l1) / denom;
                let delta = new - b[j];
                if delta != 0.0 {
                    b[j] = new;
                    for (k, v) in hd.iter_mut().enumerate() {
                        *v += delta * h[(k, j)];
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change <= INNER_TOL {
                break;
            }
        }
        let step: Vec<f64> = b.iter().zip(&beta).map(|(x, y)| x - y).collect();
        let step_norm = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if step_norm <= cfg.tol {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let cand: Vec<f64> = if t == 1.0 { b.clone() } else { beta.iter().zip(&step).map(|(x, s)| x + t * s).collect() };
            let fc = objective(prob, cfg, &cand);
            if fc <= f {
                beta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no decrease along the proximal Newton direction: stationary up
            // to rounding
            converged = step_norm <= cfg.tol.sqrt();
            break;
        }
        if t * step_norm <= cfg.tol {
            converged = true;
            break;
        }
    }
    (beta, converged, iterations, f)
}

fn standardized_problem(data: &SurvivalData) -> Result<(CoxProblem, Standardizer), CoxError> {
    let st = Standardizer::fit(data.x());
    let xs = st.apply(data.x())?;
    Ok((CoxProblem::new(xs, data.time(), data.event())?, st))
}

/// Fits the elastic-net Cox model at one `(λ, α)`.
pub fn fit_coxnet(data: &SurvivalData, config: &CoxFitConfig) -> Result<CoxFit, CoxError> {
    config.validate()?;
    let (prob, st) = standardized_problem(data)?;
    let (beta, converged, iterations, objective) = fit_problem(&prob, config, &vec![0.0; data.p()]);
    Ok(CoxFit {
        active_set_size: beta.iter().filter(|b| **b != 0.0).count(),
        beta,
        config: *config,
        converged,
        iterations,
        objective,
        standardizer: st,
    })
}

/// Fits along `lambdas` in the given order with warm starts.
pub fn fit_coxnet_path(data: &SurvivalData, alpha: f64, lambdas: &[f64]) -> Result<Vec<CoxFit>, CoxError> {
    let (prob, st) = standardized_problem(data)?;
    let mut init = vec![0.0; data.p()];
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = CoxFitConfig::new(lambda, alpha)?;
        let (beta, converged, iterations, objective) = fit_problem(&prob, &cfg, &init);
        init.clone_from(&beta);
        fits.push(CoxFit {
            active_set_size: beta.iter().filter(|b| **b != 0.0).count(),
            beta,
            config: cfg,
            converged,
            iterations,
            objective,
            standardizer: st.clone(),
        });
    }
    Ok(fits)
}

/// Penalized objective of `beta` (standardized scale) on `data`, using the
/// standardization `data` itself induces.
pub fn penalized_objective(data: &SurvivalData, config: &CoxFitConfig, beta: &[f64]) -> Result<f64, CoxError> {
    let (prob, _) = standardized_problem(data)?;
    if beta.len() != prob.p() {
        return Err(CoxError::DimensionMismatch { expected: prob.p(), got: beta.len() });
    }
    Ok(objective(&prob, config, beta))
}

/// Smallest `λ` whose fit is identically zero:
/// `max_j |∂(NLL/n)/∂β_j (0)| / max(α, 0.001)` on standardized covariates.
pub fn lambda_max(data: &SurvivalData, alpha: f64) -> Result<f64, CoxError> {
    let (prob, _) = standardized_problem(data)?;
    let (_, g, _) = prob.eval(&vec![0.0; prob.p()], false);
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs())) / prob.n() as f64;
    Ok(gmax / alpha.max(0.001))
}

/// Linear predictor `Xβ̂` after applying the fit's standardization.
pub fn predict_risk(fit: &CoxFit, x_new: &Matrix) -> Result<Vec<f64>, CoxError> {
    if x_new.cols() != fit.beta.len() {
        return Err(CoxError::DimensionMismatch { expected: fit.beta.len(), got: x_new.cols() });
    }
    let xs = fit.standardizer.apply(x_new)?;
    Ok((0..xs.rows()).map(|i| numerics::dot(xs.row(i), &fit.beta)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Decreasing penalty values.
    pub lambda_path: Vec<f64>,
    pub mean_cv_metric: Vec<f64>,
    pub best_lambda: f64,
    pub best_index: usize,
}

/// Attempts at drawing a valid fold assignment.
pub const FOLD_ATTEMPTS: usize = 10;

fn assign_folds<R: Rng + ?Sized>(event: &[bool], folds: usize, rng: &mut R) -> Result<Vec<usize>, CoxError> {
    let n = event.len();
    let total_events = event.iter().filter(|&&e| e).count();
    for _ in 0..FOLD_ATTEMPTS {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut fold = vec![0; n];
        for (pos, &i) in perm.iter().enumerate() {
            fold[i] = pos % folds;
        }
        let mut held_events = vec![0usize; folds];
        for i in 0..n {
            if event[i] {
                held_events[fold[i]] += 1;
            }
        }
        let train_ok = held_events.iter().all(|&h| total_events - h >= 1);
        // held-out events are only demanded when there are enough to go round
        let held_ok = total_events < folds || held_events.iter().all(|&h| h >= 1);
        if train_ok && held_ok {
            return Ok(fold);
        }
    }
    Err(CoxError::FoldWithoutEvents { attempts: FOLD_ATTEMPTS })
}

/// `path_len` penalties log-spaced from `λ_max` down to `1e-3·λ_max`.
pub fn lambda_path(lmax: f64, path_len: usize) -> Vec<f64> {
    if path_len == 1 {
        return vec![lmax];
    }
    let (hi, lo) = (lmax.ln(), (1e-3 * lmax).ln());
    (0..path_len).map(|k| (hi + (lo - hi) * k as f64 / (path_len - 1) as f64).exp()).collect()
}

/// Lasso (`α = 1`) cross-validation over a `λ` path.
///
/// Each fold is scored by the C-index of its held-out risk scores, and each
/// `λ` by the mean over folds that contain a comparable pair. When no fold
/// does (as in leave-one-out), the C-index of the pooled out-of-fold scores is
/// used instead. The best `λ` is the first maximizer.
pub fn cv_tune_lasso<R: Rng + ?Sized>(
    data: &SurvivalData,
    folds: usize,
    path_len: usize,
    rng: &mut R,
) -> Result<CvResult, CoxError> {
    if folds < 2 || folds > data.n() {
        return Err(CoxError::InvalidConfig(format!("folds must lie in [2, n={}], got {folds}", data.n())));
    }
    if path_len == 0 {
        return Err(CoxError::InvalidConfig("path_len must be positive".into()));
    }
    if data.n_events() == 0 {
        return Err(CoxError::NoEvents);
    }
    let lmax = lambda_max(data, 1.0)?;
    // all-zero gradient (e.g. constant covariates): any positive path works
    let path = lambda_path(if lmax > 0.0 { lmax } else { 1.0 }, path_len);
    let fold = assign_folds(data.event(), folds, rng)?;

    let n = data.n();
    let mut oof = vec![vec![0.0; n]; path.len()];
    let mut sums = vec![0.0; path.len()];
    let mut scored_folds = 0usize;
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != k).collect();
        let held: Vec<usize> = (0..n).filter(|&i| fold[i] == k).collect();
        let fits = fit_coxnet_path(&data.subset(&train), 1.0, &path)?;
        let held_data = data.subset(&held);
        let mut fold_scored = false;
        for (l, fit) in fits.iter().enumerate() {
            let risk = predict_risk(fit, held_data.x())?;
            for (&i, r) in held.iter().zip(&risk) {
                oof[l][i] = *r;
            }
            match metrics::c_index(&risk, held_data.time(), held_data.event()) {
                Ok(c) => {
                    sums[l] += c;
                    fold_scored = true;
                }
                Err(MetricsError::NoComparablePairs) => {}
                Err(e) => return Err(e.into()),
            }
        }
        scored_folds += usize::from(fold_scored);
    }
    let mean_cv_metric: Vec<f64> = if scored_folds > 0 {
        sums.iter().map(|s| s / scored_folds as f64).collect()
    } else {
        oof.iter()
            .map(|r| metrics::c_index(r, data.time(), data.event()))
            .collect::<Result<_, _>>()?
    };
    let mut best_index = 0;
    for (l, &m) in mean_cv_metric.iter().enumerate() {
        if m > mean_cv_metric[best_index] {
            best_index = l;
        }
    }
    Ok(CvResult { best_lambda: path[best_index], lambda_path: path, mean_cv_metric, best_index })
}
