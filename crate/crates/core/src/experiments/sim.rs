use std::path::PathBuf;

use super::output::{num, opt_num, Table};
use super::svg::{self, Mark, Series};
use super::{prepare_output, replicate_stream, run_replicates, ExperimentConfig, ExperimentError, ExperimentKind, SummaryTable};
use crate::bayes_logit::{self, NewtonOptions};
use crate::coxnet::{self, CoxFitConfig};
use crate::datagen::{self, SurvivalData};
use crate::gp_bo::{self, BoHistory, HyperPoint};
use crate::metrics::{self, MetricRecord};

const BIN_METRICS: [&str; 6] = ["auc", "brier", "log_loss", "calib_intercept", "calib_slope", "coverage"];
const BIN_METHODS: [&str; 2] = ["bayes_laplace", "mle"];

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryReplicate {
    pub bayes: MetricRecord,
    pub mle: MetricRecord,
    pub map_converged: bool,
    pub mle_converged: bool,
    pub mle_diverged: bool,
}

#[derive(Debug, Clone)]
pub struct SimBinaryOutcome {
    pub out_dir: PathBuf,
    pub summary: SummaryTable,
    pub replicates: Vec<BinaryReplicate>,
}

fn binary_replicate(cfg: &ExperimentConfig, r: usize) -> Result<BinaryReplicate, ExperimentError> {
    let stream = replicate_stream(cfg.kind(), cfg.seed()?, r);
    let (train, test) = datagen::gen_binary(&cfg.bin_sim()?, stream)?;
    let opts = NewtonOptions::default();

    let post = bayes_logit::fit_map(&train, &cfg.prior()?, opts)?;
    let pred = bayes_logit::posterior_predict(&post, test.x(), cfg.draws()?, cfg.interval_level()?, &mut stream.substream(2).rng())?;
    let truth = test.p_true().expect("simulated data carry true risks");
    let cov = metrics::coverage(&pred.lower, &pred.upper, truth)?;
    let bayes = MetricRecord::evaluate(&pred.mean, test.y(), Some(cov))?;

    let mle = bayes_logit::fit_mle(&train, opts)?;
    let probs = bayes_logit::predict_proba(&mle.coef, test.x())?;
    let mle_rec = MetricRecord::evaluate(&probs, test.y(), None)?;
    Ok(BinaryReplicate {
        bayes,
        mle: mle_rec,
        map_converged: post.converged(),
        mle_converged: mle.converged,
        mle_diverged: mle.diverged,
    })
}

fn record_values(m: &MetricRecord) -> [Option<f64>; 6] {
    [Some(m.auc), Some(m.brier), Some(m.log_loss), Some(m.calib_intercept), Some(m.calib_slope), m.coverage]
}

fn run_binary(cfg: &ExperimentConfig) -> Result<SimBinaryOutcome, ExperimentError> {
    cfg.validate()?;
    let reps = run_replicates(cfg.replicates()?, cfg.workers()?, |r| binary_replicate(cfg, r))?;
    let out = prepare_output(cfg)?;

    let mut per_rep = Table::new(&["replicate", "method", "auc", "brier", "log_loss", "calib_intercept", "calib_slope", "coverage", "converged"]);
    for (r, rep) in reps.iter().enumerate() {
        for (method, rec, conv) in [(BIN_METHODS[0], &rep.bayes, rep.map_converged), (BIN_METHODS[1], &rep.mle, rep.mle_converged)] {
            let mut row = vec![(r + 1).to_string(), method.to_string()];
            row.extend(record_values(rec).iter().map(|v| opt_num(*v)));
            row.push(u8::from(conv).to_string());
            per_rep.push(row);
        }
    }
    out.table("replicates", &per_rep)?;

    // the summary is computed from the formatted per-replicate values so a
    // reader can reproduce it from the CSV
    let columns: Vec<Vec<Vec<f64>>> = BIN_METHODS
        .iter()
        .map(|m| {
            BIN_METRICS
                .iter()
                .map(|k| {
                    let methods = per_rep.column_str("method");
                    per_rep.column_f64(k).into_iter().zip(methods).filter(|(v, mm)| mm == m && !v.is_nan()).map(|(v, _)| v).collect()
                })
                .collect()
        })
        .collect();
    let summary = SummaryTable::build(&BIN_METRICS, &BIN_METHODS, &columns);
    out.table("summary", &summary.to_table())?;
    let mut conv = Table::new(&["method", "n_sim", "converged", "diverged"]);
    let n = reps.len();
    conv.push(vec!["bayes_laplace".into(), n.to_string(), reps.iter().filter(|r| r.map_converged).count().to_string(), "0".into()]);
    conv.push(vec![
        "mle".into(),
        n.to_string(),
        reps.iter().filter(|r| r.mle_converged).count().to_string(),
        reps.iter().filter(|r| r.mle_diverged).count().to_string(),
    ]);
    out.table("convergence", &conv)?;

    for (metric, label) in [("auc", "AUC"), ("brier", "Brier score"), ("calib_slope", "calibration slope"), ("coverage", "coverage")] {
        let mut fig = Table::new(&["replicate", "method", metric]);
        let j = per_rep.header.iter().position(|h| h == metric).expect("metric column");
        for row in per_rep.rows.iter().filter(|row| row[j] != "NA") {
            fig.push(vec![row[0].clone(), row[1].clone(), row[j].clone()]);
        }
        let methods = fig.column_str("method");
        let vals = fig.column_f64(metric);
        let groups: Vec<(String, Vec<f64>)> = BIN_METHODS
            .iter()
            .map(|m| (m.to_string(), vals.iter().zip(&methods).filter(|(_, mm)| *mm == m).map(|(v, _)| *v).collect::<Vec<f64>>()))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        let svg = svg::box_plot(&format!("{} across replicates", label), label, &groups);
        out.figure(&format!("box_{metric}"), &fig, &svg)?;
    }
    Ok(SimBinaryOutcome { out_dir: out.root, summary, replicates: reps })
}

/// Low-dimensional logistic simulation: Laplace-approximate Bayes against
/// the unpenalized MLE, on independent test sets.
pub fn run_sim_binary(cfg: &ExperimentConfig) -> Result<SimBinaryOutcome, ExperimentError> {
    expect_kind(cfg, ExperimentKind::SimBinary)?;
    run_binary(cfg)
}

/// High-dimensional correlated-covariate variant: shrinkage prior against
/// the (frequently divergent) MLE.
pub fn run_sim_highdim(cfg: &ExperimentConfig) -> Result<SimBinaryOutcome, ExperimentError> {
    expect_kind(cfg, ExperimentKind::SimHighdim)?;
    run_binary(cfg)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<(), ExperimentError> {
    if cfg.kind() == kind {
        Ok(())
    } else {
        Err(ExperimentError::Config(format!("expected a {kind} configuration, got {}", cfg.kind())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalReplicate {
    pub oracle: f64,
    pub baseline: f64,
    pub bayesopt: f64,
    pub cv_best_lambda: f64,
    pub history: BoHistory,
}

#[derive(Debug, Clone)]
pub struct SimSurvivalOutcome {
    pub out_dir: PathBuf,
    pub summary: SummaryTable,
    pub replicates: Vec<SurvivalReplicate>,
}

/// Validation C-index of the elastic net fitted on `train` at
/// `θ = (log λ, α)`. A fit with all-zero coefficients scores 0.5.
pub(crate) fn cox_validation_c(train: &SurvivalData, val: &SurvivalData, theta: &HyperPoint) -> Result<f64, ExperimentError> {
    let cfg = CoxFitConfig::new(theta.coords[0].exp(), theta.coords[1])?;
    let fit = coxnet::fit_coxnet(train, &cfg)?;
    let risk = coxnet::predict_risk(&fit, val.x())?;
    Ok(metrics::c_index(&risk, val.time(), val.event())?)
}

fn survival_replicate(cfg: &ExperimentConfig, r: usize) -> Result<SurvivalReplicate, ExperimentError> {
    let stream = replicate_stream(cfg.kind(), cfg.seed()?, r);
    let (train, val) = datagen::gen_survival(&cfg.surv_sim()?, stream)?;
    let oracle = metrics::c_index(val.lp_true().expect("simulated data carry the true predictor"), val.time(), val.event())?;

    let cv = coxnet::cv_tune_lasso(&train, cfg.cv_folds()?, cfg.path_len()?, &mut stream.substream(2).rng())?;
    let fit = coxnet::fit_coxnet(&train, &CoxFitConfig::new(cv.best_lambda, 1.0)?)?;
    let baseline = metrics::c_index(&coxnet::predict_risk(&fit, val.x())?, val.time(), val.event())?;

    let history = gp_bo::bo_run(
        |theta: &HyperPoint| cox_validation_c(&train, &val, theta),
        &cfg.domain()?,
        &cfg.bo()?,
        &mut stream.substream(3).rng(),
    )?;
    Ok(SurvivalReplicate { oracle, baseline, bayesopt: history.best_value, cv_best_lambda: cv.best_lambda, history })
}

/// `round, log_lambda, alpha, c_index, iteration, design` rows.
pub(crate) fn bo_history_table(h: &BoHistory) -> Table {
    let mut t = Table::new(&["round", "log_lambda", "alpha", "c_index", "iteration", "design"]);
    for row in &h.rows {
        t.push(vec![
            row.round.to_string(),
            num(row.theta.coords[0]),
            num(row.theta.coords[1]),
            num(row.value),
            row.round.to_string(),
            u8::from(row.is_design).to_string(),
        ]);
    }
    t
}

/// Trace and landscape figures for one BO history.
pub(crate) fn bo_figures(out: &super::output::OutputDir, h: &BoHistory, domain: &gp_bo::Domain) -> Result<(), ExperimentError> {
    let mut trace = Table::new(&["round", "c_index", "running_best"]);
    for (row, best) in h.rows.iter().zip(h.running_best()) {
        trace.push(vec![row.round.to_string(), num(row.value), num(best)]);
    }
    let rounds = trace.column_f64("round");
    let pts = |col: &str| rounds.iter().copied().zip(trace.column_f64(col)).collect::<Vec<_>>();
    let svg = svg::xy_plot(
        "Bayesian optimization trace",
        "round",
        "validation C-index",
        &[
            Series { label: "evaluated", points: pts("c_index"), mark: Mark::Points },
            Series { label: "running best", points: pts("running_best"), mark: Mark::Line },
        ],
        None,
        None,
    );
    out.figure("bo_trace", &trace, &svg)?;

    let mut land = Table::new(&["log_lambda", "alpha", "c_index"]);
    for row in &h.rows {
        land.push(vec![num(row.theta.coords[0]), num(row.theta.coords[1]), num(row.value)]);
    }
    let (ll, al, cc) = (land.column_f64("log_lambda"), land.column_f64("alpha"), land.column_f64("c_index"));
    let pts: Vec<(f64, f64, f64)> = (0..ll.len()).map(|i| (ll[i], al[i], cc[i])).collect();
    let svg = svg::heat_scatter(
        "Explored hyperparameters",
        "log lambda",
        "alpha",
        &pts,
        (domain.lower()[0], domain.upper()[0]),
        (domain.lower()[1], domain.upper()[1]),
    );
    out.figure("bo_landscape", &land, &svg)
}

/// Survival simulation: oracle risk, cross-validated lasso baseline and
/// BO-tuned elastic net, each scored by validation C-index.
pub fn run_sim_survival(cfg: &ExperimentConfig) -> Result<SimSurvivalOutcome, ExperimentError> {
    expect_kind(cfg, ExperimentKind::SimSurvival)?;
    cfg.validate()?;
    let reps = run_replicates(cfg.replicates()?, cfg.workers()?, |r| survival_replicate(cfg, r))?;
    let out = prepare_output(cfg)?;

    let mut per_rep =
        Table::new(&["replicate", "oracle", "baseline_cv", "bayesopt", "cv_best_lambda", "bo_best_log_lambda", "bo_best_alpha"]);
    for (r, rep) in reps.iter().enumerate() {
        per_rep.push(vec![
            (r + 1).to_string(),
            num(rep.oracle),
            num(rep.baseline),
            num(rep.bayesopt),
            num(rep.cv_best_lambda),
            num(rep.history.best_theta.coords[0]),
            num(rep.history.best_theta.coords[1]),
        ]);
    }
    out.table("replicates", &per_rep)?;

    let methods = ["oracle", "baseline_cv", "bayesopt"];
    let columns: Vec<Vec<Vec<f64>>> = methods.iter().map(|m| vec![per_rep.column_f64(m)]).collect();
    let summary = SummaryTable::build(&["c_index"], &methods, &columns);
    out.table("summary", &summary.to_table())?;

    let traced = &reps[cfg.trace_replicate()? - 1].history;
    out.table("bo_history", &bo_history_table(traced))?;
    bo_figures(&out, traced, &cfg.domain()?)?;

    let mut fig = Table::new(&["replicate", "method", "c_index"]);
    for row in &per_rep.rows {
        for (k, m) in methods.iter().enumerate() {
            fig.push(vec![row[0].clone(), m.to_string(), row[k + 1].clone()]);
        }
    }
    let vals = fig.column_f64("c_index");
    let labels = fig.column_str("method");
    let groups: Vec<(String, Vec<f64>)> = methods
        .iter()
        .map(|m| (m.to_string(), vals.iter().zip(&labels).filter(|(_, l)| *l == m).map(|(v, _)| *v).collect()))
        .collect();
    out.figure("box_c_index", &fig, &svg::box_plot("Validation C-index across replicates", "C-index", &groups))?;
    Ok(SimSurvivalOutcome { out_dir: out.root, summary, replicates: reps })
}
