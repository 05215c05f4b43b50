use std::fmt::Display;

use rand::Rng;

use super::gp::{fit_kernel, gp_condition_in, GpSurrogate};
use super::{halton, Domain, GpError, HyperPoint};
use crate::numerics::Matrix;

/// Default UCB exploration weight.
pub const DEFAULT_KAPPA: f64 = 2.576;

const CANDIDATES: u64 = 2048;
const REFINE_STARTS: usize = 5;
const REFINE_STEP: f64 = 0.05;
const REFINE_MIN_STEP: f64 = 1e-4;
const DUPLICATE_TOL: f64 = 1e-6;

/// Upper confidence bound `μ(θ) + κ·s(θ)`.
pub fn ucb(s: &GpSurrogate, theta: &HyperPoint, kappa: f64) -> f64 {
    let (mu, sd) = super::gp_posterior(s, theta);
    mu + kappa * sd
}

struct Acquisition<'a> {
    s: &'a GpSurrogate,
    domain: &'a Domain,
    kappa: f64,
    seen: Vec<(f64, Vec<f64>)>,
}

impl Acquisition<'_> {
    fn eval(&mut self, u: &[f64]) -> f64 {
        let theta = self.domain.from_unit(u);
        let (mu, sd) = self.s.posterior_scaled(&self.s.scale_point(&theta.coords));
        let a = mu + self.kappa * sd;
        self.seen.push((a, u.to_vec()));
        a
    }

    /// Compass search in the unit box from `u`.
    fn refine(&mut self, mut u: Vec<f64>, mut fu: f64) {
        let mut step = REFINE_STEP;
        while step >= REFINE_MIN_STEP {
            let mut improved = false;
            for k in 0..u.len() {
                for dir in [1.0, -1.0] {
                    let mut cand = u.clone();
                    cand[k] = (u[k] + dir * step).clamp(0.0, 1.0);
                    if cand[k] == u[k] {
                        continue;
                    }
                    let fc = self.eval(&cand);
                    if fc > fu {
                        u = cand;
                        fu = fc;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
}

/// Approximate UCB maximizer over `domain`: 2048 randomly rotated Halton
/// candidates, compass refinement from the best five, then the best point
/// seen that is not within 1e-6 (unit-box distance) of an observation.
pub fn propose_next<R: Rng + ?Sized>(s: &GpSurrogate, domain: &Domain, kappa: f64, rng: &mut R) -> HyperPoint {
    let d = domain.dim();
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut acq = Acquisition { s, domain, kappa, seen: Vec::new() };
    for i in 0..CANDIDATES {
        acq.eval(&halton::halton_point(i, &shift));
    }
    let mut order: Vec<usize> = (0..acq.seen.len()).collect();
    order.sort_by(|&a, &b| acq.seen[b].0.total_cmp(&acq.seen[a].0));
    let starts: Vec<(f64, Vec<f64>)> = order.iter().take(REFINE_STARTS).map(|&i| acq.seen[i].clone()).collect();
    for (fu, u) in starts {
        acq.refine(u, fu);
    }

    let observed: Vec<Vec<f64>> = (0..s.n_obs()).map(|i| domain.to_unit(s.x_obs().row(i))).collect();
    let is_dup = |u: &[f64]| {
        observed.iter().any(|o| o.iter().zip(u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < DUPLICATE_TOL)
    };
    let mut order: Vec<usize> = (0..acq.seen.len()).collect();
    order.sort_by(|&a, &b| acq.seen[b].0.total_cmp(&acq.seen[a].0));
    let pick = order.iter().copied().find(|&i| !is_dup(&acq.seen[i].1)).unwrap_or(order[0]);
    domain.from_unit(&acq.seen[pick].1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoConfig {
    /// Space-filling design size.
    pub init_n: usize,
    /// UCB acquisition rounds after the design.
    pub iters: usize,
    pub kappa: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self { init_n: 5, iters: 15, kappa: DEFAULT_KAPPA }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoRow {
    /// 1-based, counting design points too.
    pub round: usize,
    pub theta: HyperPoint,
    pub value: f64,
    pub is_design: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoHistory {
    pub rows: Vec<BoRow>,
    pub best_round: usize,
    pub best_theta: HyperPoint,
    pub best_value: f64,
}

impl BoHistory {
    fn new() -> Self {
        Self { rows: Vec::new(), best_round: 0, best_theta: HyperPoint::new(Vec::new()), best_value: f64::NEG_INFINITY }
    }

    fn push(&mut self, theta: HyperPoint, value: f64, is_design: bool) {
        let round = self.rows.len() + 1;
        if value > self.best_value {
            self.best_round = round;
            self.best_theta = theta.clone();
            self.best_value = value;
        }
        self.rows.push(BoRow { round, theta, value, is_design });
    }

    /// Best value seen up to and including each round.
    pub fn running_best(&self) -> Vec<f64> {
        self.rows
            .iter()
            .scan(f64::NEG_INFINITY, |best, r| {
                *best = best.max(r.value);
                Some(*best)
            })
            .collect()
    }

    fn observations(&self) -> (Matrix, Vec<f64>) {
        let rows: Vec<&[f64]> = self.rows.iter().map(|r| r.theta.coords.as_slice()).collect();
        (Matrix::from_rows(&rows), self.rows.iter().map(|r| r.value).collect())
    }
}

/// Maximizes `objective` over `domain`: a rotated-Halton design of
/// `init_n` points, then `iters` UCB proposals, refitting the kernel by
/// marginal likelihood before each proposal.
pub fn bo_run<F, E, R>(mut objective: F, domain: &Domain, config: &BoConfig, rng: &mut R) -> Result<BoHistory, GpError>
where
    F: FnMut(&HyperPoint) -> Result<f64, E>,
    E: Display,
    R: Rng + ?Sized,
{
    if config.init_n == 0 {
        return Err(GpError::NoObservations);
    }
    let mut eval = |theta: &HyperPoint| match objective(theta) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(GpError::ObjectiveFailure { theta: theta.coords.clone(), message: format!("non-finite value {v}") }),
        Err(e) => Err(GpError::ObjectiveFailure { theta: theta.coords.clone(), message: e.to_string() }),
    };
    let mut history = BoHistory::new();
    let shift: Vec<f64> = (0..domain.dim()).map(|_| rng.random::<f64>()).collect();
    for i in 1..=config.init_n as u64 {
        let theta = domain.from_unit(&halton::halton_point(i, &shift));
        let v = eval(&theta)?;
        history.push(theta, v, true);
    }
    for _ in 0..config.iters {
        let (x, y) = history.observations();
        let params = fit_kernel(domain, &x, &y)?;
        let s = gp_condition_in(domain, &x, &y, &params)?;
        let theta = propose_next(&s, domain, config.kappa, rng);
        let v = eval(&theta)?;
        history.push(theta, v, false);
    }
    Ok(history)
}
