//! Gaussian-process surrogate regression over a box and a UCB-driven
//! Bayesian-optimization loop for noisy black-box objectives.

mod bo;
mod gp;
mod halton;

pub use bo::{bo_run, propose_next, ucb, BoConfig, BoHistory, BoRow, DEFAULT_KAPPA};
pub use gp::{fit_kernel, gp_condition, gp_condition_in, gp_posterior, log_marginal_likelihood, GpSurrogate, KernelParams};
pub use halton::{halton, halton_point};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),
    #[error("need at least one observation")]
    NoObservations,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective failed at {theta:?}: {message}")]
    ObjectiveFailure { theta: Vec<f64>, message: String },
}

/// A point in hyperparameter space. For Cox tuning the coordinates are
/// `(log λ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPoint {
    pub coords: Vec<f64>,
}

impl HyperPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Axis-aligned box `lower ≤ θ ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GpError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(GpError::InvalidDomain(format!("bounds of length {} and {}", lower.len(), upper.len())));
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] < upper[k]) || !lower[k].is_finite() || !upper[k].is_finite()) {
            return Err(GpError::InvalidDomain(format!("need lower < upper, got {} >= {} in dimension {k}", lower[k], upper[k])));
        }
        Ok(Self { lower, upper })
    }

    /// `log λ ∈ [−5, 1]`, `α ∈ [0, 1]`.
    pub fn cox_default() -> Self {
        Self { lower: vec![-5.0, 0.0], upper: vec![1.0, 1.0] }
    }

    pub fn unit(d: usize) -> Self {
        Self { lower: vec![0.0; d], upper: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, p: &HyperPoint) -> bool {
        p.dim() == self.dim() && (0..self.dim()).all(|k| self.lower[k] <= p.coords[k] && p.coords[k] <= self.upper[k])
    }

    /// Maps a point of the box to `[0,1]^d`.
    pub fn to_unit(&self, coords: &[f64]) -> Vec<f64> {
        coords.iter().enumerate().map(|(k, c)| (c - self.lower[k]) / (self.upper[k] - self.lower[k])).collect()
    }

    /// Inverse of [`Domain::to_unit`], clamped into the box.
    pub fn from_unit(&self, u: &[f64]) -> HyperPoint {
        HyperPoint::new(
            u.iter()
                .enumerate()
                .map(|(k, v)| (self.lower[k] + v * (self.upper[k] - self.lower[k])).clamp(self.lower[k], self.upper[k]))
                .collect(),
        )
    }
}
