//! Browser demo over `bayes-epi`. Each operation is a plain Rust function
//! returning a struct, plus a `#[wasm_bindgen]` wrapper that flattens the
//! result into a `Float64Array` for `www/index.html`.

use bayes_epi::bayes_logit::{self, NewtonOptions, PriorSpec};
use bayes_epi::datagen::{self, BinSimConfig, RngStream};
use bayes_epi::decision::{self, CostSpec, DecisionRule};
use bayes_epi::gp_bo::{self, Domain, HyperPoint, KernelParams};
use bayes_epi::metrics::{self, MetricRecord};
use bayes_epi::numerics::Matrix;
use wasm_bindgen::prelude::*;

const DRAWS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct GpView {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub ucb: Vec<f64>,
    pub next: f64,
}

/// GP surrogate on `[0, 1]` evaluated on `grid_n` points, plus the UCB
/// proposal for the next evaluation. `lengthscale = 0` fits the kernel by
/// marginal likelihood; a positive value fixes it, with the signal variance
/// set to the sample variance of `ys` (at least 0.01) and noise 1e-6.
pub fn gp_view(xs: &[f64], ys: &[f64], kappa: f64, lengthscale: f64, grid_n: usize, seed: u64) -> Result<GpView, String> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(format!("need matching, non-empty inputs (got {} x, {} y)", xs.len(), ys.len()));
    }
    if !(kappa >= 0.0) || !(lengthscale >= 0.0) || grid_n < 2 {
        return Err("kappa and lengthscale must be nonnegative and the grid needs two points".into());
    }
    let domain = Domain::unit(1);
    let x = Matrix::from_vec(xs.len(), 1, xs.to_vec()).map_err(|e| e.to_string())?;
    let params = if lengthscale > 0.0 {
        let m = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / ys.len() as f64;
        KernelParams::new(vec![lengthscale], var.max(0.01), 1e-6)
    } else {
        gp_bo::fit_kernel(&domain, &x, ys)
    }
    .map_err(|e| e.to_string())?;
    let s = gp_bo::gp_condition_in(&domain, &x, ys, &params).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..grid_n).map(|i| i as f64 / (grid_n - 1) as f64).collect();
    let (mut mean, mut sd, mut ucb) = (Vec::new(), Vec::new(), Vec::new());
    for &g in &grid {
        let th = HyperPoint::new(vec![g]);
        let (m, v) = gp_bo::gp_posterior(&s, &th);
        mean.push(m);
        sd.push(v);
        ucb.push(gp_bo::ucb(&s, &th, kappa));
    }
    let next = gp_bo::propose_next(&s, &domain, kappa, &mut RngStream::new(seed, 0).rng()).coords[0];
    Ok(GpView { grid, mean, sd, ucb, next })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningView {
    pub threshold: f64,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub screen: Vec<bool>,
    pub outcome: Vec<bool>,
    pub realized_loss: f64,
}

/// Fits the Bayesian logistic model to a simulated six-covariate cohort and
/// screens `n_show` test subjects under the given costs. With `use_upper`,
/// the upper 95% predictive bound is thresholded instead of the mean.
pub fn screening_view(seed: u64, cost_fp: f64, cost_fn: f64, use_upper: bool, n_show: usize) -> Result<ScreeningView, String> {
    let costs = CostSpec::new(cost_fp, cost_fn).map_err(|e| e.to_string())?;
    let cfg = BinSimConfig { n_test: n_show.max(1), ..BinSimConfig::low_dimensional() };
    let stream = RngStream::new(seed, 0);
    let (train, test) = datagen::gen_binary(&cfg, stream).map_err(|e| e.to_string())?;
    let post = bayes_logit::fit_map(&train, &PriorSpec::default(), NewtonOptions::default()).map_err(|e| e.to_string())?;
    let pred = bayes_logit::posterior_predict(&post, test.x(), DRAWS, 0.95, &mut stream.substream(2).rng())
        .map_err(|e| e.to_string())?;
    let rule = if use_upper { DecisionRule::UpperBound } else { DecisionRule::Mean };
    let d = decision::decide_interval(&pred.mean, &pred.upper, &costs, rule).map_err(|e| e.to_string())?;
    Ok(ScreeningView {
        threshold: d.threshold,
        realized_loss: decision::realized_loss(&d.screen, test.y(), &costs),
        mean: pred.mean,
        lower: pred.lower,
        upper: pred.upper,
        screen: d.screen,
        outcome: test.y().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationView {
    pub bayes: MetricRecord,
    pub mle: MetricRecord,
    /// `(mean predicted, observed proportion)` per decile.
    pub bayes_deciles: Vec<(f64, f64)>,
    pub mle_deciles: Vec<(f64, f64)>,
}

/// Bayes (normal prior, sd `prior_sd`) vs maximum likelihood on the
/// twenty-covariate correlated design with `n_train` training subjects.
pub fn calibration_view(seed: u64, n_train: usize, prior_sd: f64) -> Result<CalibrationView, String> {
    let cfg = BinSimConfig { n_train, ..BinSimConfig::high_dimensional() };
    let stream = RngStream::new(seed, 0);
    let (train, test) = datagen::gen_binary(&cfg, stream).map_err(|e| e.to_string())?;
    let prior = PriorSpec::isotropic(prior_sd).map_err(|e| e.to_string())?;
    let post = bayes_logit::fit_map(&train, &prior, NewtonOptions::default()).map_err(|e| e.to_string())?;
    let pb = bayes_logit::posterior_predict(&post, test.x(), DRAWS, 0.95, &mut stream.substream(2).rng())
        .map_err(|e| e.to_string())?
        .mean;
    let mle = bayes_logit::fit_mle(&train, NewtonOptions::default()).map_err(|e| e.to_string())?;
    let pm = bayes_logit::predict_proba(&mle.coef, test.x()).map_err(|e| e.to_string())?;
    let deciles = |p: &[f64]| -> Result<Vec<(f64, f64)>, String> {
        let t = metrics::decile_table(p, test.y()).map_err(|e| e.to_string())?;
        Ok(t.rows.iter().map(|r| (r.mean_predicted, r.observed_proportion)).collect())
    };
    Ok(CalibrationView {
        bayes: MetricRecord::evaluate(&pb, test.y(), None).map_err(|e| e.to_string())?,
        mle: MetricRecord::evaluate(&pm, test.y(), None).map_err(|e| e.to_string())?,
        bayes_deciles: deciles(&pb)?,
        mle_deciles: deciles(&pm)?,
    })
}

fn flag(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

fn record(r: &MetricRecord) -> [f64; 5] {
    [r.auc, r.brier, r.log_loss, r.calib_intercept, r.calib_slope]
}

/// Layout: `[next, grid_n, grid.., mean.., sd.., ucb..]`.
#[wasm_bindgen(js_name = gpExplore)]
pub fn gp_explore(xs: &[f64], ys: &[f64], kappa: f64, lengthscale: f64, grid_n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    let v = gp_view(xs, ys, kappa, lengthscale, grid_n, seed.into()).map_err(|e| JsError::new(&e))?;
    let mut out = vec![v.next, v.grid.len() as f64];
    for part in [v.grid, v.mean, v.sd, v.ucb] {
        out.extend(part);
    }
    Ok(out)
}

/// Layout: `[threshold, realized_loss]` then `(mean, lower, upper, screen, outcome)` per subject.
#[wasm_bindgen(js_name = screenCohort)]
pub fn screen_cohort(seed: u32, cost_fp: f64, cost_fn: f64, use_upper: bool, n_show: usize) -> Result<Vec<f64>, JsError> {
    let v = screening_view(seed.into(), cost_fp, cost_fn, use_upper, n_show).map_err(|e| JsError::new(&e))?;
    let mut out = vec![v.threshold, v.realized_loss];
    for i in 0..v.mean.len() {
        out.extend([v.mean[i], v.lower[i], v.upper[i], flag(v.screen[i]), flag(v.outcome[i])]);
    }
    Ok(out)
}

/// Layout: Bayes `(auc, brier, log_loss, calib_intercept, calib_slope)`, the
/// same for MLE, then ten `(predicted, observed)` pairs for each.
#[wasm_bindgen(js_name = compareCalibration)]
pub fn compare_calibration(seed: u32, n_train: usize, prior_sd: f64) -> Result<Vec<f64>, JsError> {
    let v = calibration_view(seed.into(), n_train, prior_sd).map_err(|e| JsError::new(&e))?;
    let mut out: Vec<f64> = record(&v.bayes).into_iter().chain(record(&v.mle)).collect();
    for (a, b) in v.bayes_deciles.iter().chain(&v.mle_deciles) {
        out.extend([*a, *b]);
    }
    Ok(out)
}
