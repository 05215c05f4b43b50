//! Configuration-driven experiment runners behind the `bayes-epi` command.
//!
//! Every run writes `<out>/<experiment>/<tag>/` containing `tables/*.csv`,
//! `figures/*.csv` with matching `figures/*.svg`, and `config.snapshot`.

mod config;
pub mod output;
mod real;
mod sim;
pub mod svg;

pub use config::{ExperimentConfig, ExperimentKind};
pub use real::{run_fit_binary, run_tune_cox, FitBinaryOutcome, TuneCoxOutcome};
pub use sim::{run_sim_binary, run_sim_highdim, run_sim_survival, SimBinaryOutcome, SimSurvivalOutcome};

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::bayes_logit::LogitError;
use crate::coxnet::CoxError;
use crate::datagen::{self, DataError, RngStream};
use crate::gp_bo::GpError;
use crate::metrics::MetricsError;
use crate::numerics::{self, NumericsError};
use output::{opt_num, OutputDir, Table};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl ExperimentError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }

    fn in_replicate(self, r: usize) -> Self {
        let wrap = |m: String| format!("replicate {r}: {m}");
        match self {
            Self::Config(m) => Self::Config(wrap(m)),
            Self::Data(m) => Self::Data(wrap(m)),
            Self::Numerical(m) => Self::Numerical(wrap(m)),
            Self::Output(m) => Self::Output(wrap(m)),
        }
    }
}

impl From<DataError> for ExperimentError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidConfig(m) => Self::Config(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<MetricsError> for ExperimentError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::SingleClass | MetricsError::NoComparablePairs | MetricsError::TooFewObservations { .. } => {
                Self::Data(e.to_string())
            }
            other => Self::Numerical(other.to_string()),
        }
    }
}

impl From<CoxError> for ExperimentError {
    fn from(e: CoxError) -> Self {
        match e {
            CoxError::NoEvents | CoxError::FoldWithoutEvents { .. } => Self::Data(e.to_string()),
            CoxError::InvalidConfig(m) => Self::Config(m),
            CoxError::Metrics(m) => m.into(),
            other => Self::Numerical(other.to_string()),
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ExperimentError {
            fn from(e: $t) -> Self {
                Self::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(LogitError, GpError, NumericsError, crate::decision::DecisionError);

/// Per-method means and sample sds over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub metrics: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub n_sim: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl SummaryTable {
    /// `columns[m][k]` holds replicate values of metric `k` for method `m`.
    fn build(metrics: &[&str], methods: &[&str], columns: &[Vec<Vec<f64>>]) -> Self {
        let rows = methods
            .iter()
            .zip(columns)
            .map(|(m, cols)| {
                let (mean, sd) = cols.iter().map(|c| numerics::mean_sd(c)).unzip();
                SummaryRow { method: m.to_string(), n_sim: cols.first().map_or(0, Vec::len), mean, sd }
            })
            .collect();
        Self { metrics: metrics.iter().map(|s| s.to_string()).collect(), rows }
    }

    /// `(mean, sd)` of `metric` for `method`.
    pub fn get(&self, method: &str, metric: &str) -> Option<(f64, f64)> {
        let k = self.metrics.iter().position(|m| m == metric)?;
        let row = self.rows.iter().find(|r| r.method == method)?;
        Some((row.mean[k], row.sd[k]))
    }

    fn to_table(&self) -> Table {
        let mut header = vec!["method".to_string(), "n_sim".to_string()];
        for m in &self.metrics {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_sd"));
        }
        let mut t = Table { header, rows: Vec::new() };
        for r in &self.rows {
            let mut row = vec![r.method.clone(), r.n_sim.to_string()];
            for (m, s) in r.mean.iter().zip(&r.sd) {
                row.push(opt_num(Some(*m).filter(|v| !v.is_nan())));
                row.push(opt_num(Some(*s).filter(|v| !v.is_nan())));
            }
            t.push(row);
        }
        t
    }
}

/// Stream for 0-based replicate `r` of `kind`.
pub(crate) fn replicate_stream(kind: ExperimentKind, seed: u64, r: usize) -> RngStream {
    RngStream::new(seed, datagen::stream_key(kind.stream_namespace(), r as u64))
}

/// Runs `job` for every replicate on a pool of `workers` threads and returns
/// results in replicate order. The first failing replicate (by index) aborts
/// the run.
pub(crate) fn run_replicates<T, F>(replicates: usize, workers: usize, job: F) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(usize) -> Result<T, ExperimentError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start {workers} workers: {e}")))?;
    let results: Vec<Result<T, ExperimentError>> = pool.install(|| (0..replicates).into_par_iter().map(&job).collect());
    results.into_iter().enumerate().map(|(r, res)| res.map_err(|e| e.in_replicate(r + 1))).collect()
}

pub(crate) fn prepare_output(cfg: &ExperimentConfig) -> Result<OutputDir, ExperimentError> {
    let out = OutputDir::create(&cfg.out_dir(), cfg.kind().name(), &cfg.tag()?)?;
    out.text(&out.root.join("config.snapshot"), &cfg.snapshot())?;
    Ok(out)
}

/// Validates `cfg`, runs the experiment and returns the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<PathBuf, ExperimentError> {
    cfg.validate()?;
    Ok(match cfg.kind() {
        ExperimentKind::SimBinary => run_sim_binary(cfg)?.out_dir,
        ExperimentKind::SimHighdim => run_sim_highdim(cfg)?.out_dir,
        ExperimentKind::SimSurvival => run_sim_survival(cfg)?.out_dir,
        ExperimentKind::FitBinary => run_fit_binary(cfg)?.out_dir,
        ExperimentKind::TuneCox => run_tune_cox(cfg)?.out_dir,
    })
}
