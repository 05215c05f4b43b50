//! Bayesian risk prediction, cost-sensitive screening, penalized Cox
//! regression and Bayesian-optimization hyperparameter tuning for
//! epidemiological data.

pub mod bayes_logit;
pub mod coxnet;
pub mod datagen;
pub mod decision;
#[cfg(feature = "cli")]
pub mod experiments;
pub mod gp_bo;
pub mod metrics;
pub mod numerics;
