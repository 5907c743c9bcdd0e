//! Soft violations on overlapping positions and their Lagrangian duals.

use serde::{Deserialize, Serialize};

use crate::experts::ExpertStats;
use crate::{Error, Result};

pub const LAMBDA_EPS: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 10.0;

/// Coordination risk at position `i` when it holds `chosen`:
/// `(k_i - 1) * Var(V_i) * (1 - N_{i,chosen} / sum_a N_ia)`.
pub fn soft_violation(i: usize, stats: &ExpertStats, k_i: usize, chosen: usize) -> f64 {
    if k_i <= 1 {
        return 0.0;
    }
    let v = stats.value_row(i);
    if v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    let visits = stats.visit_row(i);
    let total: u64 = visits.iter().sum();
    let unsure = if total == 0 {
        1.0
    } else {
        1.0 - visits[chosen] as f64 / total as f64
    };
    (k_i - 1) as f64 * var * unsure
}

/// `(k_i - 1) * lambda_i`
pub fn score_penalty(lambda_i: f64, k_i: usize) -> f64 {
    k_i.saturating_sub(1) as f64 * lambda_i
}

/// Per-position multipliers updated by entropic mirror descent with
/// momentum in log space.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    lambda: Vec<f64>,
    lambda_prev: Vec<f64>,
    alpha0: f64,
    lambda_max: f64,
    eps: f64,
}

impl DualState {
    pub fn new(n: usize, alpha0: f64) -> Self {
        Self::with_bounds(n, alpha0, LAMBDA_EPS, LAMBDA_MAX)
    }

    pub fn with_bounds(n: usize, alpha0: f64, eps: f64, lambda_max: f64) -> Self {
        Self {
            lambda: vec![eps; n],
            lambda_prev: vec![eps; n],
            alpha0,
            lambda_max,
            eps,
        }
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_prev(&self) -> &[f64] {
        &self.lambda_prev
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.eps, self.lambda_max)
    }

    /// `alpha0 / sqrt(t)`
    pub fn step_size(&self, t: usize) -> f64 {
        self.alpha0 / (t.max(1) as f64).sqrt()
    }

    /// Mean multiplier over `indices`; `eps` when empty.
    pub fn mean_over(&self, indices: &[usize]) -> f64 {
        if indices.is_empty() {
            return self.eps;
        }
        indices.iter().map(|&i| self.lambda[i]).sum::<f64>() / indices.len() as f64
    }

    pub fn record(&self, t: usize, overlap: &[usize], xi: &[f64]) -> CoordinationRecord {
        CoordinationRecord {
            t,
            mean_lambda: self.mean_over(overlap),
            sum_xi: xi.iter().sum(),
            min_lambda: self.lambda.iter().copied().fold(f64::INFINITY, f64::min),
            max_lambda: self
                .lambda
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// One update at iteration `t >= 1` with step `alpha0 / sqrt(t)` and
    /// momentum `2 / (t + 1)`.
    pub fn dual_update(&mut self, xi: &[f64], t: usize) -> Result<()> {
        if t == 0 {
            return Err(Error::Parameter("dual update iteration starts at 1".into()));
        }
        self.step(xi, self.step_size(t), 2.0 / (t as f64 + 1.0))
    }

    pub(crate) fn step(&mut self, xi: &[f64], alpha: f64, theta: f64) -> Result<()> {
        crate::error::check_dims(self.lambda.len(), xi.len())?;
        for ((lam, prev), &x) in self.lambda.iter_mut().zip(&mut self.lambda_prev).zip(xi) {
            let current = lam.ln();
            let stepped = current + alpha * x.max(0.0);
            let extrapolated = stepped + theta * (stepped - current);
            *prev = *lam;
            *lam = extrapolated.exp().clamp(self.eps, self.lambda_max);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinationRecord {
    pub t: usize,
    /// Mean multiplier over the overlap set.
    pub mean_lambda: f64,
    pub sum_xi: f64,
    pub min_lambda: f64,
    pub max_lambda: f64,
}
