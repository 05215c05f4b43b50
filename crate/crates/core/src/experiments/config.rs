use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ExperimentError;
use crate::bayes_logit::PriorSpec;
use crate::datagen::{BinSimConfig, SurvSimConfig};
use crate::decision::{CostSpec, DecisionRule};
use crate::gp_bo::{BoConfig, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SimBinary,
    SimHighdim,
    SimSurvival,
    FitBinary,
    TuneCox,
}

impl ExperimentKind {
    pub const ALL: [Self; 5] = [Self::SimBinary, Self::SimHighdim, Self::SimSurvival, Self::FitBinary, Self::TuneCox];

    pub fn name(self) -> &'static str {
        match self {
            Self::SimBinary => "sim-binary",
            Self::SimHighdim => "sim-highdim",
            Self::SimSurvival => "sim-survival",
            Self::FitBinary => "fit-binary",
            Self::TuneCox => "tune-cox",
        }
    }

    /// Stream namespace for this experiment's replicates.
    pub(crate) fn stream_namespace(self) -> u64 {
        match self {
            Self::SimBinary => 1,
            Self::SimHighdim => 2,
            Self::SimSurvival => 3,
            Self::FitBinary => 4,
            Self::TuneCox => 5,
        }
    }

    pub fn is_simulation(self) -> bool {
        matches!(self, Self::SimBinary | Self::SimHighdim | Self::SimSurvival)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{s}`")))
    }
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Keys accepted by `kind` with their default values. An empty default
/// means "unset".
fn defaults(kind: ExperimentKind) -> Vec<(&'static str, String)> {
    let s = |v: &str| v.to_string();
    let mut d = vec![("seed", s("1")), ("workers", s("1")), ("out", s("results")), ("tag", s(""))];
    let bo = |d: &mut Vec<(&'static str, String)>| {
        d.extend([
            ("bo_init", s("5")),
            ("bo_iters", s("15")),
            ("kappa", s("2.576")),
            ("log_lambda_min", s("-5")),
            ("log_lambda_max", s("1")),
            ("alpha_min", s("0")),
            ("alpha_max", s("1")),
        ])
    };
    match kind {
        ExperimentKind::SimBinary | ExperimentKind::SimHighdim => {
            let (bin, r, sd) = if kind == ExperimentKind::SimBinary {
                (BinSimConfig::low_dimensional(), "30", "2.5")
            } else {
                (BinSimConfig::high_dimensional(), "50", "1")
            };
            d.extend([
                ("replicates", s(r)),
                ("n_train", bin.n_train.to_string()),
                ("n_test", bin.n_test.to_string()),
                ("p", bin.p.to_string()),
                ("beta_star", list(&bin.beta_star)),
                ("rho", bin.rho.to_string()),
                ("prior_intercept_sd", s(sd)),
                ("prior_sd", s(sd)),
                ("draws", s("4000")),
                ("level", s("0.95")),
            ]);
        }
        ExperimentKind::SimSurvival => {
            let sv = SurvSimConfig::standard();
            d.extend([
                ("replicates", s("20")),
                ("n_train", sv.n_train.to_string()),
                ("n_val", sv.n_val.to_string()),
                ("p", sv.p.to_string()),
                ("beta_star", list(&sv.beta_star)),
                ("baseline_rate", sv.baseline_rate.to_string()),
                ("censor_rate", sv.censor_rate.to_string()),
                ("cv_folds", s("5")),
                ("path_len", s("50")),
                ("trace_replicate", s("1")),
            ]);
            bo(&mut d);
        }
        ExperimentKind::FitBinary => d.extend([
            ("data", s("")),
            ("label_column", s("type")),
            ("positive_level", s("Yes")),
            ("train_fraction", s("0.7")),
            ("prior_intercept_sd", s("2.5")),
            ("prior_sd", s("2.5")),
            ("draws", s("4000")),
            ("pred_level", s("0.9")),
            ("cost_fp", s("1")),
            ("cost_fn", s("9")),
            ("decision_rule", s("mean")),
        ]),
        ExperimentKind::TuneCox => {
            d.extend([("data", s("")), ("time_column", s("time")), ("event_column", s("cens")), ("train_fraction", s("0.7"))]);
            bo(&mut d);
        }
    }
    d
}

/// Effective configuration: defaults for the experiment kind, overlaid with
/// the config file and then with command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    kind: ExperimentKind,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self { kind, values: defaults(kind).into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    /// Parses `key = value` lines; `#` starts a comment. An `experiment` key,
    /// if present, must match `kind`. A relative `data` path is resolved
    /// against `base_dir`.
    pub fn parse(kind: ExperimentKind, text: &str, base_dir: Option<&Path>) -> Result<Self, ExperimentError> {
        let mut cfg = Self::new(kind);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "experiment" {
                if value != kind.name() {
                    return Err(ExperimentError::Config(format!("config is for `{value}`, not `{kind}`")));
                }
                continue;
            }
            let value = match (key, base_dir) {
                ("data", Some(dir)) if !value.is_empty() && Path::new(value).is_relative() => dir.join(value).display().to_string(),
                _ => value.to_string(),
            };
            cfg.set(key, &value).map_err(|e| ExperimentError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(kind: ExperimentKind, path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(kind, &text, path.parent())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => Err(ExperimentError::Config(format!("unknown key `{key}` for {}", self.kind))),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map_or("", String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, ExperimentError> {
        let v = self.raw(key);
        v.parse().map_err(|_| ExperimentError::Config(format!("invalid value `{v}` for `{key}`")))
    }

    fn get_list(&self, key: &str) -> Result<Vec<f64>, ExperimentError> {
        self.raw(key)
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| ExperimentError::Config(format!("invalid number `{t}` in `{key}`"))))
            .collect()
    }

    pub fn seed(&self) -> Result<u64, ExperimentError> {
        self.get("seed")
    }

    pub fn workers(&self) -> Result<usize, ExperimentError> {
        let w: usize = self.get("workers")?;
        if w == 0 {
            return Err(ExperimentError::Config("workers must be at least 1".into()));
        }
        Ok(w)
    }

    pub fn replicates(&self) -> Result<usize, ExperimentError> {
        if !self.kind.is_simulation() {
            return Ok(1);
        }
        let r: usize = self.get("replicates")?;
        if r == 0 {
            return Err(ExperimentError::Config("replicates must be at least 1".into()));
        }
        Ok(r)
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }

    pub fn tag(&self) -> Result<String, ExperimentError> {
        match self.raw("tag") {
            "" => Ok(format!("seed-{}", self.seed()?)),
            t if t.contains(['/', '\\']) || t == ".." => Err(ExperimentError::Config(format!("invalid tag `{t}`"))),
            t => Ok(t.to_string()),
        }
    }

    pub fn data_path(&self) -> Result<PathBuf, ExperimentError> {
        match self.raw("data") {
            "" => Err(ExperimentError::Config(format!("{} needs `data` (a CSV path)", self.kind))),
            p => Ok(PathBuf::from(p)),
        }
    }

    pub fn bin_sim(&self) -> Result<BinSimConfig, ExperimentError> {
        let c = BinSimConfig {
            n_train: self.get("n_train")?,
            n_test: self.get("n_test")?,
            p: self.get("p")?,
            beta_star: self.get_list("beta_star")?,
            rho: self.get("rho")?,
        };
        c.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn surv_sim(&self) -> Result<SurvSimConfig, ExperimentError> {
        let c = SurvSimConfig {
            n_train: self.get("n_train")?,
            n_val: self.get("n_val")?,
            p: self.get("p")?,
            beta_star: self.get_list("beta_star")?,
            baseline_rate: self.get("baseline_rate")?,
            censor_rate: self.get("censor_rate")?,
        };
        c.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn prior(&self) -> Result<PriorSpec, ExperimentError> {
        PriorSpec::new(self.get("prior_intercept_sd")?, self.get("prior_sd")?).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn draws(&self) -> Result<usize, ExperimentError> {
        let s: usize = self.get("draws")?;
        if s < 100 {
            return Err(ExperimentError::Config("draws must be at least 100".into()));
        }
        Ok(s)
    }

    fn level(&self, key: &str) -> Result<f64, ExperimentError> {
        let l: f64 = self.get(key)?;
        if !(l > 0.0 && l < 1.0) {
            return Err(ExperimentError::Config(format!("`{key}` must lie in (0,1)")));
        }
        Ok(l)
    }

    pub fn interval_level(&self) -> Result<f64, ExperimentError> {
        self.level("level")
    }

    pub fn pred_level(&self) -> Result<f64, ExperimentError> {
        self.level("pred_level")
    }

    pub fn train_fraction(&self) -> Result<f64, ExperimentError> {
        self.level("train_fraction")
    }

    pub fn costs(&self) -> Result<CostSpec, ExperimentError> {
        CostSpec::new(self.get("cost_fp")?, self.get("cost_fn")?).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn decision_rule(&self) -> Result<DecisionRule, ExperimentError> {
        match self.raw("decision_rule") {
            "mean" => Ok(DecisionRule::Mean),
            "upper" => Ok(DecisionRule::UpperBound),
            other => Err(ExperimentError::Config(format!("decision_rule must be `mean` or `upper`, got `{other}`"))),
        }
    }

    pub fn label_column(&self) -> &str {
        self.raw("label_column")
    }

    /// `None` when labels are already coded 0/1.
    pub fn positive_level(&self) -> Option<&str> {
        Some(self.raw("positive_level")).filter(|s| !s.is_empty())
    }

    pub fn time_column(&self) -> &str {
        self.raw("time_column")
    }

    pub fn event_column(&self) -> &str {
        self.raw("event_column")
    }

    pub fn cv_folds(&self) -> Result<usize, ExperimentError> {
        self.get("cv_folds")
    }

    pub fn path_len(&self) -> Result<usize, ExperimentError> {
        self.get("path_len")
    }

    /// 1-based replicate whose BO trace is persisted.
    pub fn trace_replicate(&self) -> Result<usize, ExperimentError> {
        let t: usize = self.get("trace_replicate")?;
        if t == 0 || t > self.replicates()? {
            return Err(ExperimentError::Config(format!("trace_replicate must lie in 1..={}", self.replicates()?)));
        }
        Ok(t)
    }

    pub fn bo(&self) -> Result<BoConfig, ExperimentError> {
        let c = BoConfig { init_n: self.get("bo_init")?, iters: self.get("bo_iters")?, kappa: self.get("kappa")? };
        if c.init_n == 0 || !(c.kappa >= 0.0) {
            return Err(ExperimentError::Config("bo_init must be positive and kappa nonnegative".into()));
        }
        Ok(c)
    }

    pub fn domain(&self) -> Result<Domain, ExperimentError> {
        Domain::new(
            vec![self.get("log_lambda_min")?, self.get("alpha_min")?],
            vec![self.get("log_lambda_max")?, self.get("alpha_max")?],
        )
        .map_err(|e| ExperimentError::Config(e.to_string()))
        .and_then(|d| {
            if d.lower()[1] < 0.0 || d.upper()[1] > 1.0 {
                Err(ExperimentError::Config("alpha bounds must lie within [0,1]".into()))
            } else {
                Ok(d)
            }
        })
    }

    /// Builds every typed view this kind uses, so bad values surface before
    /// any work starts.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.seed()?;
        self.workers()?;
        self.replicates()?;
        self.tag()?;
        match self.kind {
            ExperimentKind::SimBinary | ExperimentKind::SimHighdim => {
                self.bin_sim()?;
                self.prior()?;
                self.draws()?;
                self.interval_level()?;
            }
            ExperimentKind::SimSurvival => {
                self.surv_sim()?;
                self.cv_folds()?;
                self.path_len()?;
                self.trace_replicate()?;
                self.bo()?;
                self.domain()?;
            }
            ExperimentKind::FitBinary => {
                self.data_path()?;
                self.train_fraction()?;
                self.prior()?;
                self.draws()?;
                self.pred_level()?;
                self.costs()?;
                self.decision_rule()?;
            }
            ExperimentKind::TuneCox => {
                self.data_path()?;
                self.train_fraction()?;
                self.bo()?;
                self.domain()?;
            }
        }
        Ok(())
    }

    /// `key = value` lines of the effective configuration, sorted by key.
    pub fn snapshot(&self) -> String {
        let mut s = format!("experiment = {}\n", self.kind);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}
