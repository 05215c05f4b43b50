//! Seeded simulation designs and CSV ingestion.
//!
//! Three simulation regimes are provided: low-dimensional binary data with
//! independent covariates, high-dimensional binary data with AR(1)
//! correlated covariates, and exponential proportional-hazards survival data
//! with independent exponential censoring. All generators are pure functions
//! of their configuration and an [`RngStream`].

mod csv_io;

pub use csv_io::{load_csv_binary, load_csv_survival};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp, StandardNormal};
use thiserror::Error;

use crate::numerics::{self, Matrix, SpdMatrix};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at data row {row}, column `{column}`: {message}")]
    ParseError { row: usize, column: String, message: String },
    #[error("label column `{column}` is not binary: {message}")]
    NonBinaryLabel { column: String, message: String },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Identifies one reproducible random sequence.
///
/// The same `(seed, stream_id)` always yields the same draws; different
/// stream ids select disjoint ChaCha20 streams under the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream `k` of this stream.
    pub fn substream(&self, k: u64) -> Self {
        Self { seed: self.seed, stream_id: stream_key(self.stream_id, k) }
    }
}

/// Mixes two integers into a stream id (splitmix64 finalizer over a
/// combination of both), so replicate `r` of experiment `e` can use
/// `stream_key(e, r)` independently of execution order.
pub fn stream_key(a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(a) ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Covariates with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Matrix,
    y: Vec<bool>,
    p_true: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(x: Matrix, y: Vec<bool>, p_true: Option<Vec<f64>>) -> Result<Self, DataError> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, p_true, names)
    }

    pub fn with_names(
        x: Matrix,
        y: Vec<bool>,
        p_true: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if x.rows() != y.len() {
            return Err(DataError::InvalidData(format!("{} rows but {} labels", x.rows(), y.len())));
        }
        if feature_names.len() != x.cols() {
            return Err(DataError::InvalidData("feature name count does not match columns".into()));
        }
        if let Some(p) = &p_true {
            if p.len() != y.len() {
                return Err(DataError::InvalidData("p_true length does not match labels".into()));
            }
            if p.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
                return Err(DataError::InvalidData("p_true entries must lie in (0,1)".into()));
            }
        }
        Ok(Self { x, y, p_true, feature_names })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn p_true(&self) -> Option<&[f64]> {
        self.p_true.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Rows `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            p_true: self.p_true.as_ref().map(|p| idx.iter().map(|&i| p[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Covariates with right-censored event times.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalData {
    x: Matrix,
    time: Vec<f64>,
    event: Vec<bool>,
    lp_true: Option<Vec<f64>>,
    feature_names: Vec<String>,
}

impl SurvivalData {
    pub fn new(x: Matrix, time: Vec<f64>, event: Vec<bool>, lp_true: Option<Vec<f64>>) -> Result<Self, DataError> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, time, event, lp_true, names)
    }

    pub fn with_names(
        x: Matrix,
        time: Vec<f64>,
        event: Vec<bool>,
        lp_true: Option<Vec<f64>>,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let n = x.rows();
        if time.len() != n || event.len() != n {
            return Err(DataError::InvalidData(format!(
                "{n} rows but {} times and {} event flags",
                time.len(),
                event.len()
            )));
        }
        if let Some(i) = time.iter().position(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(DataError::InvalidData(format!("time[{i}] = {} is not a nonnegative number", time[i])));
        }
        if lp_true.as_ref().is_some_and(|lp| lp.len() != n) {
            return Err(DataError::InvalidData("lp_true length does not match rows".into()));
        }
        if feature_names.len() != x.cols() {
            return Err(DataError::InvalidData("feature name count does not match columns".into()));
        }
        Ok(Self { x, time, event, lp_true, feature_names })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn lp_true(&self) -> Option<&[f64]> {
        self.lp_true.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n(&self) -> usize {
        self.time.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            time: idx.iter().map(|&i| self.time[i]).collect(),
            event: idx.iter().map(|&i| self.event[i]).collect(),
            lp_true: self.lp_true.as_ref().map(|lp| idx.iter().map(|&i| lp[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Binary logistic simulation design. `beta_star` holds the intercept first.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSimConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub p: usize,
    pub beta_star: Vec<f64>,
    pub rho: f64,
}

impl BinSimConfig {
    /// Six independent covariates, 500 training and 500 test subjects.
    pub fn low_dimensional() -> Self {
        Self {
            n_train: 500,
            n_test: 500,
            p: 6,
            beta_star: vec![-1.0, 1.2, 0.8, -0.6, 0.5, 0.0, -0.8],
            rho: 0.0,
        }
    }

    /// Twenty AR(1)-correlated covariates (rho 0.7) with three signals,
    /// 80 training and 1000 test subjects.
    pub fn high_dimensional() -> Self {
        let mut beta_star = vec![0.0; 21];
        beta_star[..4].copy_from_slice(&[-1.0, 1.2, 0.8, -0.9]);
        Self { n_train: 80, n_test: 1000, p: 20, beta_star, rho: 0.7 }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_train == 0 || self.n_test == 0 || self.p == 0 {
            return Err(DataError::InvalidConfig("n_train, n_test and p must be positive".into()));
        }
        if self.beta_star.len() != self.p + 1 {
            return Err(DataError::InvalidConfig(format!(
                "beta_star has {} entries, expected p+1 = {}",
                self.beta_star.len(),
                self.p + 1
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(DataError::InvalidConfig(format!("rho = {} must lie in [0,1)", self.rho)));
        }
        if self.beta_star.iter().any(|b| !b.is_finite()) {
            return Err(DataError::InvalidConfig("beta_star must be finite".into()));
        }
        Ok(())
    }
}

/// Exponential proportional-hazards survival design.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvSimConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub p: usize,
    pub beta_star: Vec<f64>,
    pub baseline_rate: f64,
    pub censor_rate: f64,
}

impl SurvSimConfig {
    /// 400 training and 200 validation subjects, six covariates of which
    /// four carry signal, baseline hazard 0.1 and censoring rate 0.05.
    pub fn standard() -> Self {
        Self {
            n_train: 400,
            n_val: 200,
            p: 6,
            beta_star: vec![1.5f64.ln(), 2.0f64.ln(), 0.8, -0.5, 0.0, 0.0],
            baseline_rate: 0.1,
            censor_rate: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_train == 0 || self.n_val == 0 || self.p == 0 {
            return Err(DataError::InvalidConfig("n_train, n_val and p must be positive".into()));
        }
        if self.beta_star.len() != self.p {
            return Err(DataError::InvalidConfig(format!(
                "beta_star has {} entries, expected p = {}",
                self.beta_star.len(),
                self.p
            )));
        }
        if !(self.baseline_rate > 0.0 && self.baseline_rate.is_finite()) {
            return Err(DataError::InvalidConfig("baseline_rate must be positive".into()));
        }
        if !(self.censor_rate >= 0.0 && self.censor_rate.is_finite()) {
            return Err(DataError::InvalidConfig("censor_rate must be nonnegative".into()));
        }
        Ok(())
    }
}

/// AR(1) covariance `Σ_jk = rho^|j-k|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Matrix {
    let mut s = Matrix::zeros(p, p);
    for j in 0..p {
        for k in 0..p {
            s[(j, k)] = rho.powi((j as i32 - k as i32).abs());
        }
    }
    s
}

/// Draws `n` rows from `N_p(0, Σ)` given the Cholesky factor of `Σ`.
fn draw_gaussian_rows(n: usize, chol: &numerics::CholeskyFactor, rng: &mut ChaCha20Rng) -> Matrix {
    let p = chol.dim();
    let mut x = Matrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        x.row_mut(i).copy_from_slice(&chol.mul_lower(&z));
    }
    x
}

fn binary_sample(config: &BinSimConfig, n: usize, chol: &numerics::CholeskyFactor, stream: RngStream) -> LabeledDataset {
    let mut rng = stream.rng();
    let x = draw_gaussian_rows(n, chol, &mut rng);
    let (b0, b) = config.beta_star.split_first().expect("validated");
    let mut y = Vec::with_capacity(n);
    let mut p_true = Vec::with_capacity(n);
    for i in 0..n {
        let eta = b0 + numerics::dot(x.row(i), b);
        let p = numerics::stable_sigmoid(eta);
        let u: f64 = rng.random();
        y.push(u < p);
        // keep the recorded truth strictly inside (0,1) even for extreme eta
        p_true.push(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0));
    }
    LabeledDataset::new(x, y, Some(p_true)).expect("shapes agree by construction")
}

/// Simulates a training and a test set from the logistic design, using
/// substreams 0 and 1 of `rng` respectively.
pub fn gen_binary(config: &BinSimConfig, rng: RngStream) -> Result<(LabeledDataset, LabeledDataset), DataError> {
    config.validate()?;
    let sigma = SpdMatrix::new(ar1_covariance(config.p, config.rho)).expect("AR(1) matrix is symmetric");
    let chol = numerics::cholesky(&sigma).map_err(|e| DataError::InvalidConfig(e.to_string()))?;
    let train = binary_sample(config, config.n_train, &chol, rng.substream(0));
    let test = binary_sample(config, config.n_test, &chol, rng.substream(1));
    Ok((train, test))
}

fn survival_sample(config: &SurvSimConfig, n: usize, stream: RngStream) -> SurvivalData {
    let mut rng = stream.rng();
    let p = config.p;
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        for v in x.row_mut(i) {
            *v = rng.sample(StandardNormal);
        }
    }
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    let mut lp = Vec::with_capacity(n);
    let censor = (config.censor_rate > 0.0).then(|| Exp::new(config.censor_rate).expect("positive rate"));
    for i in 0..n {
        let eta = numerics::dot(x.row(i), &config.beta_star);
        let rate = config.baseline_rate * eta.exp();
        let t: f64 = rng.sample(Exp::new(rate).expect("positive rate"));
        let c = censor.map_or(f64::INFINITY, |d| rng.sample(d));
        // ties count as events
        event.push(t <= c);
        time.push(t.min(c));
        lp.push(eta);
    }
    SurvivalData::new(x, time, event, Some(lp)).expect("shapes agree by construction")
}

/// Simulates training and validation survival data (substreams 0 and 1).
pub fn gen_survival(config: &SurvSimConfig, rng: RngStream) -> Result<(SurvivalData, SurvivalData), DataError> {
    config.validate()?;
    Ok((survival_sample(config, config.n_train, rng.substream(0)), survival_sample(config, config.n_val, rng.substream(1))))
}
