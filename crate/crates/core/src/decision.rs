//! Cost-weighted screening: screen when the expected loss of not screening
//! is at least the expected loss of screening.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("costs must be positive and finite (got C_FP={cost_fp}, C_FN={cost_fn})")]
    InvalidCosts { cost_fp: f64, cost_fn: f64 },
    #[error("probability {0} outside [0,1]")]
    InvalidProbability(f64),
    #[error("length mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Misclassification costs; correct decisions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec {
    cost_fp: f64,
    cost_fn: f64,
}

impl CostSpec {
    pub fn new(cost_fp: f64, cost_fn: f64) -> Result<Self, DecisionError> {
        let ok = |c: f64| c > 0.0 && c.is_finite();
        if ok(cost_fp) && ok(cost_fn) {
            Ok(Self { cost_fp, cost_fn })
        } else {
            Err(DecisionError::InvalidCosts { cost_fp, cost_fn })
        }
    }

    pub fn cost_fp(&self) -> f64 {
        self.cost_fp
    }

    pub fn cost_fn(&self) -> f64 {
        self.cost_fn
    }
}

/// Which probability the threshold is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionRule {
    /// Posterior predictive mean.
    #[default]
    Mean,
    /// Upper credible bound: screens anyone whose risk could plausibly reach
    /// the threshold.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningDecision {
    pub threshold: f64,
    pub screen: Vec<bool>,
    pub expected_loss_screen: Vec<f64>,
    pub expected_loss_noscreen: Vec<f64>,
}

impl ScreeningDecision {
    pub fn n_screened(&self) -> usize {
        self.screen.iter().filter(|&&s| s).count()
    }
}

/// `t⋆ = C_FP / (C_FP + C_FN)`.
pub fn screening_threshold(costs: &CostSpec) -> f64 {
    costs.cost_fp / (costs.cost_fp + costs.cost_fn)
}

fn check(probs: &[f64]) -> Result<(), DecisionError> {
    match probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(DecisionError::InvalidProbability(p)),
        None => Ok(()),
    }
}

/// Bayes rule on posterior predictive means; `p ≥ t⋆` screens.
pub fn decide(probs: &[f64], costs: &CostSpec) -> Result<ScreeningDecision, DecisionError> {
    decide_with_rule(probs, probs, costs)
}

/// Like [`decide`], but thresholds `rule_probs` (e.g. upper credible bounds)
/// while expected losses still use the means.
pub fn decide_with_rule(
    means: &[f64],
    rule_probs: &[f64],
    costs: &CostSpec,
) -> Result<ScreeningDecision, DecisionError> {
    if means.len() != rule_probs.len() {
        return Err(DecisionError::DimensionMismatch(means.len(), rule_probs.len()));
    }
    check(means)?;
    check(rule_probs)?;
    let t = screening_threshold(costs);
    Ok(ScreeningDecision {
        threshold: t,
        // compared against t⋆ directly so the rule and the threshold agree bitwise
        screen: rule_probs.iter().map(|&p| p >= t).collect(),
        expected_loss_screen: means.iter().map(|&p| costs.cost_fp * (1.0 - p)).collect(),
        expected_loss_noscreen: means.iter().map(|&p| costs.cost_fn * p).collect(),
    })
}

/// Dispatches on [`DecisionRule`].
pub fn decide_interval(
    means: &[f64],
    upper: &[f64],
    costs: &CostSpec,
    rule: DecisionRule,
) -> Result<ScreeningDecision, DecisionError> {
    match rule {
        DecisionRule::Mean => decide(means, costs),
        DecisionRule::UpperBound => decide_with_rule(means, upper, costs),
    }
}

/// Average realized loss of screening decisions against observed outcomes.
pub fn realized_loss(screen: &[bool], outcomes: &[bool], costs: &CostSpec) -> f64 {
    let total: f64 = screen
        .iter()
        .zip(outcomes)
        .map(|(&s, &y)| match (s, y) {
            (true, false) => costs.cost_fp,
            (false, true) => costs.cost_fn,
            _ => 0.0,
        })
        .sum();
    total / screen.len().max(1) as f64
}
