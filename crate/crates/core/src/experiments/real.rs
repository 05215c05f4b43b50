use std::path::PathBuf;

use rand::seq::SliceRandom;

use super::output::{num, Table};
use super::sim::{bo_figures, bo_history_table, cox_validation_c};
use super::svg::{self, Mark, Series};
use super::{prepare_output, replicate_stream, ExperimentConfig, ExperimentError, ExperimentKind};
use crate::bayes_logit::{self, NewtonOptions};
use crate::datagen::{self, LabeledDataset, RngStream};
use crate::decision::{self, ScreeningDecision};
use crate::gp_bo::{self, BoHistory};
use crate::metrics::{self, DecileTable, MetricRecord};
use crate::numerics::{self, Matrix};

/// Seeded shuffle split; both index lists are returned in file order.
fn split(n: usize, train_fraction: f64, stream: RngStream) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream.rng());
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let (mut a, mut b) = (perm[..n_train].to_vec(), perm[n_train..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn column_means(x: &Matrix) -> Vec<f64> {
    (0..x.cols()).map(|j| x.column(j).iter().sum::<f64>() / x.rows().max(1) as f64).collect()
}

fn centered(x: &Matrix, means: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (v, m) in out.row_mut(i).iter_mut().zip(means) {
            *v -= m;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefSummary {
    pub term: String,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct FitBinaryOutcome {
    pub out_dir: PathBuf,
    pub posterior: Vec<CoefSummary>,
    pub metrics: MetricRecord,
    pub decisions: ScreeningDecision,
    pub deciles: DecileTable,
    pub n_train: usize,
    pub n_test: usize,
}

/// Bayesian logistic risk model on a CSV: posterior summary, test-set
/// predictive intervals, calibration deciles and cost-based screening.
///
/// Covariates are centered on the training means before fitting, so the
/// intercept prior applies at the average covariate profile; reported
/// intercept draws are mapped back to the original scale.
pub fn run_fit_binary(cfg: &ExperimentConfig) -> Result<FitBinaryOutcome, ExperimentError> {
    if cfg.kind() != ExperimentKind::FitBinary {
        return Err(ExperimentError::Config(format!("expected a fit-binary configuration, got {}", cfg.kind())));
    }
    cfg.validate()?;
    let data = datagen::load_csv_binary(cfg.data_path()?, cfg.label_column(), cfg.positive_level())?;
    let stream = replicate_stream(cfg.kind(), cfg.seed()?, 0);
    let (tr, te) = split(data.n(), cfg.train_fraction()?, stream.substream(0));
    let (train, test) = (data.subset(&tr), data.subset(&te));
    if train.n() == 0 || test.n() == 0 {
        return Err(ExperimentError::Data(format!("{} rows cannot be split into non-empty train and test sets", data.n())));
    }
    let means = column_means(train.x());
    let train_c = LabeledDataset::with_names(centered(train.x(), &means), train.y().to_vec(), None, train.feature_names().to_vec())?;
    let test_x = centered(test.x(), &means);

    let post = bayes_logit::fit_map(&train_c, &cfg.prior()?, NewtonOptions::default())?;
    let draws = cfg.draws()?;
    let coef_draws = bayes_logit::draw_coefficients(&post, draws, &mut stream.substream(1).rng());
    let mut posterior = Vec::new();
    let terms: Vec<String> = std::iter::once("(Intercept)".to_string()).chain(data.feature_names().iter().cloned()).collect();
    for (j, term) in terms.iter().enumerate() {
        let mut col: Vec<f64> = (0..draws)
            .map(|s| {
                let b = coef_draws.row(s);
                if j == 0 {
                    b[0] - numerics::dot(&b[1..], &means)
                } else {
                    b[j]
                }
            })
            .collect();
        let (mean, sd) = numerics::mean_sd(&col);
        col.sort_by(f64::total_cmp);
        posterior.push(CoefSummary {
            term: term.clone(),
            mean,
            sd,
            lower: numerics::quantile_sorted(&col, 0.025),
            upper: numerics::quantile_sorted(&col, 0.975),
        });
    }

    let pred = bayes_logit::posterior_predict(&post, &test_x, draws, cfg.pred_level()?, &mut stream.substream(2).rng())?;
    let costs = cfg.costs()?;
    let decisions = decision::decide_interval(&pred.mean, &pred.upper, &costs, cfg.decision_rule()?)?;
    let record = MetricRecord::evaluate(&pred.mean, test.y(), None)?;
    let deciles = metrics::decile_table(&pred.mean, test.y())?;

    let out = prepare_output(cfg)?;
    let mut t = Table::new(&["term", "mean", "sd", "q2.5", "q97.5"]);
    for c in &posterior {
        t.push(vec![c.term.clone(), num(c.mean), num(c.sd), num(c.lower), num(c.upper)]);
    }
    out.table("posterior_summary", &t)?;

    let mut t = Table::new(&["row", "observed", "p_mean", "p_lower", "p_upper", "loss_screen", "loss_noscreen", "screen"]);
    for (k, &i) in te.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            u8::from(test.y()[k]).to_string(),
            num(pred.mean[k]),
            num(pred.lower[k]),
            num(pred.upper[k]),
            num(decisions.expected_loss_screen[k]),
            num(decisions.expected_loss_noscreen[k]),
            u8::from(decisions.screen[k]).to_string(),
        ]);
    }
    out.table("predictions", &t)?;

    let mut t = Table::new(&["bin", "mean_predicted", "observed_proportion", "n"]);
    for r in &deciles.rows {
        t.push(vec![r.bin.to_string(), num(r.mean_predicted), num(r.observed_proportion), r.n.to_string()]);
    }
    out.table("deciles", &t)?;

    let mut t = Table::new(&["threshold", "cost_fp", "cost_fn", "n_test", "n_screened", "realized_loss"]);
    t.push(vec![
        num(decisions.threshold),
        num(costs.cost_fp()),
        num(costs.cost_fn()),
        test.n().to_string(),
        decisions.n_screened().to_string(),
        num(decision::realized_loss(&decisions.screen, test.y(), &costs)),
    ]);
    out.table("decisions", &t)?;

    let mut t = Table::new(&["n_train", "n_test", "auc", "brier", "log_loss", "calib_intercept", "calib_slope", "map_converged"]);
    t.push(vec![
        train.n().to_string(),
        test.n().to_string(),
        num(record.auc),
        num(record.brier),
        num(record.log_loss),
        num(record.calib_intercept),
        num(record.calib_slope),
        u8::from(post.converged()).to_string(),
    ]);
    out.table("metrics", &t)?;

    let mut roc = Table::new(&["fpr", "tpr"]);
    for (f, tp) in metrics::roc_curve(&pred.mean, test.y())? {
        roc.push(vec![num(f), num(tp)]);
    }
    let pts: Vec<(f64, f64)> = roc.column_f64("fpr").into_iter().zip(roc.column_f64("tpr")).collect();
    let svg = svg::xy_plot(
        &format!("ROC curve (AUC {})", num(record.auc)),
        "false positive rate",
        "true positive rate",
        &[
            Series { label: "posterior mean", points: pts, mark: Mark::Line },
            Series { label: "chance", points: vec![(0.0, 0.0), (1.0, 1.0)], mark: Mark::Dashed },
        ],
        Some((0.0, 1.0)),
        Some((0.0, 1.0)),
    );
    out.figure("roc", &roc, &svg)?;

    let mut cal = Table::new(&["bin", "mean_predicted", "observed_proportion"]);
    for r in &deciles.rows {
        cal.push(vec![r.bin.to_string(), num(r.mean_predicted), num(r.observed_proportion)]);
    }
    let pts: Vec<(f64, f64)> = cal.column_f64("mean_predicted").into_iter().zip(cal.column_f64("observed_proportion")).collect();
    let svg = svg::xy_plot(
        "Calibration by decile",
        "mean predicted risk",
        "observed proportion",
        &[
            Series { label: "deciles", points: pts.clone(), mark: Mark::Points },
            Series { label: "deciles (joined)", points: pts, mark: Mark::Line },
            Series { label: "ideal", points: vec![(0.0, 0.0), (1.0, 1.0)], mark: Mark::Dashed },
        ],
        Some((0.0, 1.0)),
        Some((0.0, 1.0)),
    );
    out.figure("calibration", &cal, &svg)?;

    Ok(FitBinaryOutcome {
        out_dir: out.root,
        posterior,
        metrics: record,
        decisions,
        deciles,
        n_train: train.n(),
        n_test: test.n(),
    })
}

#[derive(Debug, Clone)]
pub struct TuneCoxOutcome {
    pub out_dir: PathBuf,
    pub history: BoHistory,
    pub refit_c_index: f64,
}

/// Elastic-net Cox tuning on a survival CSV: BO over `(log λ, α)` scored by
/// validation C-index, then a refit at the best point.
pub fn run_tune_cox(cfg: &ExperimentConfig) -> Result<TuneCoxOutcome, ExperimentError> {
    if cfg.kind() != ExperimentKind::TuneCox {
        return Err(ExperimentError::Config(format!("expected a tune-cox configuration, got {}", cfg.kind())));
    }
    cfg.validate()?;
    let data = datagen::load_csv_survival(cfg.data_path()?, cfg.time_column(), cfg.event_column())?;
    let stream = replicate_stream(cfg.kind(), cfg.seed()?, 0);
    let (tr, va) = split(data.n(), cfg.train_fraction()?, stream.substream(0));
    let (train, val) = (data.subset(&tr), data.subset(&va));
    if train.n_events() == 0 {
        return Err(ExperimentError::Data("training split has no events".into()));
    }
    let domain = cfg.domain()?;
    let history = gp_bo::bo_run(|theta| cox_validation_c(&train, &val, theta), &domain, &cfg.bo()?, &mut stream.substream(1).rng())?;
    let refit_c_index = cox_validation_c(&train, &val, &history.best_theta)?;

    let out = prepare_output(cfg)?;
    out.table("bo_history", &bo_history_table(&history))?;
    let mut best = Table::new(&["round", "log_lambda", "lambda", "alpha", "c_index", "refit_c_index"]);
    let b = &history.best_theta.coords;
    best.push(vec![
        history.best_round.to_string(),
        num(b[0]),
        num(b[0].exp()),
        num(b[1]),
        num(history.best_value),
        num(refit_c_index),
    ]);
    out.table("best", &best)?;
    bo_figures(&out, &history, &domain)?;
    Ok(TuneCoxOutcome { out_dir: out.root, history, refit_c_index })
}
