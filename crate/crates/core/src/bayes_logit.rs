//! Bayesian logistic regression by MAP estimation and Laplace approximation,
//! an unpenalized maximum-likelihood baseline, and Monte-Carlo posterior
//! predictive probabilities with credible intervals.
//!
//! Coefficient vectors always carry the intercept first.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::datagen::LabeledDataset;
use crate::numerics::{self, CholeskyFactor, Matrix, NumericsError, SpdMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogitError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Hessian is singular; Newton step cannot be formed")]
    SingularHessian,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Gaussian prior scales: `β₀ ~ N(0, intercept_sd²)`, `β_j ~ N(0, coef_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    intercept_sd: f64,
    coef_sd: f64,
}

impl PriorSpec {
    pub fn new(intercept_sd: f64, coef_sd: f64) -> Result<Self, LogitError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(intercept_sd) || !ok(coef_sd) {
            return Err(LogitError::InvalidArgument(format!(
                "prior scales must be positive and finite (got {intercept_sd}, {coef_sd})"
            )));
        }
        Ok(Self { intercept_sd, coef_sd })
    }

    /// Same scale for intercept and slopes.
    pub fn isotropic(sd: f64) -> Result<Self, LogitError> {
        Self::new(sd, sd)
    }

    pub fn intercept_sd(&self) -> f64 {
        self.intercept_sd
    }

    pub fn coef_sd(&self) -> f64 {
        self.coef_sd
    }

    /// Diagonal prior precision for a model with `p` slopes.
    pub fn precision(&self, p: usize) -> Vec<f64> {
        let mut prec = vec![self.coef_sd.powi(-2); p + 1];
        prec[0] = self.intercept_sd.powi(-2);
        prec
    }

    /// Copy with both scales multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { intercept_sd: self.intercept_sd * factor, coef_sd: self.coef_sd * factor }
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { intercept_sd: 2.5, coef_sd: 2.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the gradient.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8 }
    }
}

/// Largest coefficient magnitude the unpenalized fit may reach before it is
/// declared divergent.
pub const MLE_DIVERGENCE_CAP: f64 = 30.0;

const MAX_HALVINGS: usize = 30;
const STEP_TOL: f64 = 1e-6;

/// Penalized logistic log-likelihood `log p(y|β) - ½ Σ prec_j β_j²` over a
/// design with an implicit leading intercept column.
#[derive(Debug, Clone)]
pub struct LogPosterior<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    precision: Vec<f64>,
}

impl<'a> LogPosterior<'a> {
    pub fn new(x: &'a Matrix, y: &'a [bool], precision: Vec<f64>) -> Result<Self, LogitError> {
        if x.rows() != y.len() {
            return Err(LogitError::DimensionMismatch { expected: x.rows(), got: y.len() });
        }
        if precision.len() != x.cols() + 1 {
            return Err(LogitError::DimensionMismatch { expected: x.cols() + 1, got: precision.len() });
        }
        Ok(Self { x, y, precision })
    }

    /// Flat prior, i.e. the plain log-likelihood.
    pub fn likelihood(x: &'a Matrix, y: &'a [bool]) -> Result<Self, LogitError> {
        Self::new(x, y, vec![0.0; x.cols() + 1])
    }

    pub fn dim(&self) -> usize {
        self.precision.len()
    }

    #[inline]
    fn eta(&self, i: usize, beta: &[f64]) -> f64 {
        beta[0] + numerics::dot(self.x.row(i), &beta[1..])
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let ll: f64 = (0..self.y.len())
            .map(|i| {
                let eta = self.eta(i, beta);
                // y·η - log(1+e^η), written to stay finite for large |η|
                if self.y[i] {
                    -numerics::log1pexp(-eta)
                } else {
                    -numerics::log1pexp(eta)
                }
            })
            .sum();
        ll - 0.5 * beta.iter().zip(&self.precision).map(|(b, q)| q * b * b).sum::<f64>()
    }

    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut g: Vec<f64> = (0..d).map(|j| -self.precision[j] * beta[j]).collect();
        for i in 0..self.y.len() {
            let r = f64::from(u8::from(self.y[i])) - numerics::stable_sigmoid(self.eta(i, beta));
            g[0] += r;
            for (gj, xij) in g[1..].iter_mut().zip(self.x.row(i)) {
                *gj += r * xij;
            }
        }
        g
    }

    /// Negative Hessian `X̃ᵀWX̃ + diag(prec)`.
    pub fn neg_hessian(&self, beta: &[f64]) -> Matrix {
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        let mut xt = vec![1.0; d];
        for i in 0..self.y.len() {
            let s = numerics::stable_sigmoid(self.eta(i, beta));
            let w = s * (1.0 - s);
            if w == 0.0 {
                continue;
            }
            xt[1..].copy_from_slice(self.x.row(i));
            for a in 0..d {
                let wa = w * xt[a];
                for b in 0..=a {
                    h[(a, b)] += wa * xt[b];
                }
            }
        }
        for a in 0..d {
            h[(a, a)] += self.precision[a];
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        h
    }
}

struct NewtonOutcome {
    beta: Vec<f64>,
    converged: bool,
    capped: bool,
    iterations: usize,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton-Raphson ascent with step halving. Accepted iterates never lower
/// the objective by more than rounding. With `cap`, the iteration stops (unconverged) on the step
/// that would push any coefficient beyond `±cap`, truncating that step to the
/// boundary. `strict` rejects a starting Hessian that needs jitter.
fn newton_ascent(obj: &LogPosterior<'_>, opts: NewtonOptions, cap: Option<f64>, strict: bool) -> Result<NewtonOutcome, LogitError> {
    let d = obj.dim();
    let mut beta = vec![0.0; d];
    let mut value = obj.value(&beta);
    let mut iterations = 0;
    let mut capped = false;
    let mut converged = false;
    for iter in 0..opts.max_iter {
        let g = obj.gradient(&beta);
        let h = SpdMatrix::new(obj.neg_hessian(&beta))?;
        let step = match numerics::cholesky(&h) {
            // a rank-deficient design is reported rather than silently ridged
            Ok(f) if iter == 0 && strict && f.jitter() > 0.0 => return Err(LogitError::SingularHessian),
            Ok(f) => numerics::solve_spd(&f, &g)?,
            Err(_) if iter == 0 => return Err(LogitError::SingularHessian),
            Err(_) => break,
        };
        // Under separation the gradient vanishes along a divergent ray while
        // Newton steps stay large, so both must be small.
        if max_abs(&g) <= opts.tol && max_abs(&step) <= STEP_TOL {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        // Near the mode the predicted gain falls below the rounding of the
        // objective and a value comparison is meaningless; take the full step.
        if numerics::dot(&g, &step) <= 64.0 * f64::EPSILON * (1.0 + value.abs()) {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            let v = obj.value(&cand);
            if v.is_finite() {
                accepted = Some((cand, v));
            }
        }
        for _ in 0..=MAX_HALVINGS {
            if accepted.is_some() {
                break;
            }
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let v = obj.value(&cand);
            if v.is_finite() && v >= value {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((mut cand, mut v)) = accepted else { break };
        iterations = iter + 1;
        if let Some(cap) = cap {
            if max_abs(&cand) > cap {
                let t_cap = beta
                    .iter()
                    .zip(&step)
                    .filter(|(_, s)| **s != 0.0)
                    .map(|(b, s)| if *s > 0.0 { (cap - b) / s } else { (-cap - b) / s })
                    .fold(t, f64::min);
                cand = beta.iter().zip(&step).map(|(b, s)| (b + t_cap * s).clamp(-cap, cap)).collect();
                v = obj.value(&cand);
                // concavity keeps the truncated point at or above the old value
                if v >= value {
                    beta = cand;
                }
                capped = true;
                break;
            }
        }
        beta = cand;
        value = v;
    }
    Ok(NewtonOutcome { beta, converged, capped, iterations })
}

/// Gaussian approximation `N(map, Σ)` to the coefficient posterior, with `Σ`
/// the inverse negative Hessian of the log posterior at the mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacePosterior {
    map: Vec<f64>,
    cov_chol: CholeskyFactor,
    n_obs: usize,
    converged: bool,
    iterations: usize,
}

impl LaplacePosterior {
    /// Assembles a posterior from its parts, e.g. a hand-built degenerate one.
    pub fn from_parts(map: Vec<f64>, cov_chol: CholeskyFactor, n_obs: usize) -> Result<Self, LogitError> {
        if cov_chol.dim() != map.len() {
            return Err(LogitError::DimensionMismatch { expected: map.len(), got: cov_chol.dim() });
        }
        Ok(Self { map, cov_chol, n_obs, converged: true, iterations: 0 })
    }

    pub fn map(&self) -> &[f64] {
        &self.map
    }

    pub fn cov_chol(&self) -> &CholeskyFactor {
        &self.cov_chol
    }

    pub fn covariance(&self) -> Matrix {
        self.cov_chol.reconstruct()
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Number of slopes (excluding the intercept).
    pub fn p(&self) -> usize {
        self.map.len() - 1
    }
}

/// MAP fit under `prior` plus the Laplace covariance at the mode.
pub fn fit_map(data: &LabeledDataset, prior: &PriorSpec, opts: NewtonOptions) -> Result<LaplacePosterior, LogitError> {
    if data.n() == 0 {
        return Err(LogitError::InvalidArgument("empty dataset".into()));
    }
    let obj = LogPosterior::new(data.x(), data.y(), prior.precision(data.p()))?;
    let out = newton_ascent(&obj, opts, None, false)?;
    let h = SpdMatrix::new(obj.neg_hessian(&out.beta))?;
    let cov = numerics::cholesky(&h)?.inverse();
    let cov_chol = numerics::cholesky(&SpdMatrix::new(cov)?)?;
    Ok(LaplacePosterior {
        map: out.beta,
        cov_chol,
        n_obs: data.n(),
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Unpenalized maximum-likelihood point estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub coef: Vec<f64>,
    pub converged: bool,
    /// The iteration hit [`MLE_DIVERGENCE_CAP`] (separation or
    /// quasi-separation); `coef` then sits on the cap.
    pub diverged: bool,
    pub iterations: usize,
}

/// Newton-Raphson maximum likelihood. Non-convergence (including divergence
/// under separation) is reported through the flags, not as an error; only a
/// Hessian that is singular at the starting point is an error.
pub fn fit_mle(data: &LabeledDataset, opts: NewtonOptions) -> Result<MleFit, LogitError> {
    fit_mle_xy(data.x(), data.y(), opts)
}

pub(crate) fn fit_mle_xy(x: &Matrix, y: &[bool], opts: NewtonOptions) -> Result<MleFit, LogitError> {
    if y.is_empty() {
        return Err(LogitError::InvalidArgument("empty dataset".into()));
    }
    let obj = LogPosterior::likelihood(x, y)?;
    let out = newton_ascent(&obj, opts, Some(MLE_DIVERGENCE_CAP), true)?;
    Ok(MleFit { coef: out.beta, converged: out.converged, diverged: out.capped, iterations: out.iterations })
}

/// `σ(β₀ + xᵀβ)` for each row.
pub fn predict_proba(coef: &[f64], x: &Matrix) -> Result<Vec<f64>, LogitError> {
    if coef.len() != x.cols() + 1 {
        return Err(LogitError::DimensionMismatch { expected: coef.len() - 1, got: x.cols() });
    }
    Ok((0..x.rows()).map(|i| numerics::stable_sigmoid(coef[0] + numerics::dot(x.row(i), &coef[1..]))).collect())
}

/// Posterior predictive summaries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub draws_per_point: usize,
    pub level: f64,
}

/// Default number of predictive draws.
pub const DEFAULT_DRAWS: usize = 4000;

/// `S` coefficient draws `map + L·z`, one per row, consuming `S·(p+1)`
/// standard normals in row order.
pub fn draw_coefficients<R: Rng + ?Sized>(post: &LaplacePosterior, draws: usize, rng: &mut R) -> Matrix {
    let d = post.map.len();
    let mut out = Matrix::zeros(draws, d);
    let mut z = vec![0.0; d];
    for s in 0..draws {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let lz = post.cov_chol.mul_lower(&z);
        for (o, (m, e)) in out.row_mut(s).iter_mut().zip(post.map.iter().zip(&lz)) {
            *o = m + e;
        }
    }
    out
}

fn check_predict_args(post: &LaplacePosterior, x_new: &Matrix, draws: usize) -> Result<(), LogitError> {
    if x_new.cols() != post.p() {
        return Err(LogitError::DimensionMismatch { expected: post.p(), got: x_new.cols() });
    }
    if draws < 100 {
        return Err(LogitError::InvalidArgument(format!("need at least 100 draws, got {draws}")));
    }
    Ok(())
}

/// Full `n × S` matrix of predictive probabilities `σ(x̃ᵢᵀβ⁽ˢ⁾)`. Uses the
/// same random draws as [`posterior_predict`] for an identically seeded rng.
pub fn predictive_samples<R: Rng + ?Sized>(
    post: &LaplacePosterior,
    x_new: &Matrix,
    draws: usize,
    rng: &mut R,
) -> Result<Matrix, LogitError> {
    check_predict_args(post, x_new, draws)?;
    let betas = draw_coefficients(post, draws, rng);
    let mut out = Matrix::zeros(x_new.rows(), draws);
    for i in 0..x_new.rows() {
        let xi = x_new.row(i);
        for s in 0..draws {
            let b = betas.row(s);
            out[(i, s)] = numerics::stable_sigmoid(b[0] + numerics::dot(xi, &b[1..]));
        }
    }
    Ok(out)
}

/// Monte-Carlo posterior predictive mean and equal-tailed `level` interval
/// (empirical quantiles) for each row of `x_new`.
pub fn posterior_predict<R: Rng + ?Sized>(
    post: &LaplacePosterior,
    x_new: &Matrix,
    draws: usize,
    level: f64,
    rng: &mut R,
) -> Result<PredictiveDraws, LogitError> {
    check_predict_args(post, x_new, draws)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(LogitError::InvalidArgument(format!("level {level} outside (0,1)")));
    }
    let betas = draw_coefficients(post, draws, rng);
    let (q_lo, q_hi) = ((1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0);
    let n = x_new.rows();
    let mut res = PredictiveDraws {
        mean: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
        draws_per_point: draws,
        level,
    };
    let mut buf = vec![0.0; draws];
    for i in 0..n {
        let xi = x_new.row(i);
        for (s, v) in buf.iter_mut().enumerate() {
            let b = betas.row(s);
            *v = numerics::stable_sigmoid(b[0] + numerics::dot(xi, &b[1..]));
        }
        res.mean.push(buf.iter().sum::<f64>() / draws as f64);
        buf.sort_by(f64::total_cmp);
        res.lower.push(numerics::quantile_sorted(&buf, q_lo));
        res.upper.push(numerics::quantile_sorted(&buf, q_hi));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_binary, BinSimConfig, RngStream};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn dataset(rows: &[&[f64]], y: &[bool]) -> LabeledDataset {
        LabeledDataset::new(Matrix::from_rows(rows), y.to_vec(), None).unwrap()
    }

    fn flat() -> PriorSpec {
        PriorSpec::isotropic(1e6).unwrap()
    }

    #[test]
    fn balanced_labels_flat_prior_give_zero_intercept() {
        let rows: Vec<&[f64]> = vec![&[0.0]; 10];
        let y: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let post = fit_map(&dataset(&rows, &y), &flat(), NewtonOptions::default()).unwrap();
        assert!(post.map()[0].abs() < 1e-4);
        assert!(post.converged());
    }

    #[test]
    fn flat_prior_map_matches_mle() {
        let cfg = BinSimConfig { n_train: 20, n_test: 1, p: 2, beta_star: vec![0.2, 0.7, -0.5], rho: 0.0 };
        // pick a seed whose 20-point sample is not separable
        let (train, _) = gen_binary(&cfg, RngStream::new(4, 0)).unwrap();
        let mle = fit_mle(&train, NewtonOptions::default()).unwrap();
        assert!(mle.converged, "sample should admit a finite MLE");
        let post = fit_map(&train, &flat(), NewtonOptions::default()).unwrap();
        for (a, b) in post.map().iter().zip(&mle.coef) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn separable_data_hits_divergence_cap() {
        let d = dataset(&[&[-2.0], &[-1.0], &[1.0], &[2.0]], &[false, false, true, true]);
        let fit = fit_mle(&d, NewtonOptions::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.diverged);
        let norm = max_abs(&fit.coef);
        assert!((norm - MLE_DIVERGENCE_CAP).abs() < 1e-9, "norm {norm}");
    }

    #[test]
    fn collinear_design_is_singular_for_mle() {
        // second column duplicates the first and the intercept is the third copy
        let d = dataset(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]], &[true, false, true]);
        assert_eq!(fit_mle(&d, NewtonOptions::default()).unwrap_err(), LogitError::SingularHessian);
    }

    #[test]
    fn prior_validation() {
        assert!(PriorSpec::new(0.0, 1.0).is_err());
        assert!(PriorSpec::new(1.0, f64::INFINITY).is_err());
        assert_eq!(PriorSpec::new(2.0, 3.0).unwrap().precision(2), vec![0.25, 1.0 / 9.0, 1.0 / 9.0]);
    }

    #[test]
    fn degenerate_posterior_predicts_one_half() {
        let chol = numerics::cholesky(&SpdMatrix::new({
            let mut m = Matrix::identity(3);
            for i in 0..3 {
                m[(i, i)] = 1e-12;
            }
            m
        })
        .unwrap())
        .unwrap();
        let post = LaplacePosterior::from_parts(vec![0.0; 3], chol, 1).unwrap();
        let x = Matrix::from_rows(&[[1.0, -2.0], [30.0, 4.0]]);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let pd = posterior_predict(&post, &x, 1000, 0.95, &mut rng).unwrap();
        for i in 0..2 {
            assert!((pd.mean[i] - 0.5).abs() < 1e-3);
            assert!(pd.upper[i] - pd.lower[i] <= 1e-3);
        }
    }

    #[test]
    fn predictive_intervals_are_empirical_quantiles() {
        let cfg = BinSimConfig::low_dimensional();
        let (train, test) = gen_binary(&cfg, RngStream::new(12, 0)).unwrap();
        let post = fit_map(&train, &PriorSpec::default(), NewtonOptions::default()).unwrap();
        let x = test.x().select_rows(&[0, 1, 2, 3, 4]);
        let pd = posterior_predict(&post, &x, 1000, 0.9, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        let samples = predictive_samples(&post, &x, 1000, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
        for i in 0..5 {
            let mut row = samples.row(i).to_vec();
            let mean = row.iter().sum::<f64>() / 1000.0;
            row.sort_by(f64::total_cmp);
            assert_eq!(pd.mean[i], mean);
            assert_eq!(pd.lower[i], numerics::quantile_sorted(&row, 0.05));
            assert_eq!(pd.upper[i], numerics::quantile_sorted(&row, 0.95));
            assert!(pd.lower[i] <= pd.mean[i] && pd.mean[i] <= pd.upper[i]);
        }
    }

    #[test]
    fn predict_argument_checks() {
        let d = dataset(&[&[0.0], &[1.0], &[2.0]], &[false, true, true]);
        let post = fit_map(&d, &PriorSpec::default(), NewtonOptions::default()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let x2 = Matrix::zeros(1, 2);
        assert!(matches!(posterior_predict(&post, &x2, 1000, 0.9, &mut rng), Err(LogitError::DimensionMismatch { .. })));
        let x1 = Matrix::zeros(1, 1);
        assert!(matches!(posterior_predict(&post, &x1, 10, 0.9, &mut rng), Err(LogitError::InvalidArgument(_))));
        assert!(matches!(posterior_predict(&post, &x1, 1000, 1.0, &mut rng), Err(LogitError::InvalidArgument(_))));
    }
}
