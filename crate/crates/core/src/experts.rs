//! Shared position-action statistics and the expert selection rules.
//!
//! Every expert reads the same `n x A` tables and every observation updates
//! all of them, whichever expert proposed the action.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::problems::Solution;
use crate::{Error, Result};

/// Cap on the clipped importance-weighted loss estimate.
pub const LOSS_CAP: f64 = 100.0;
/// Prior scale of the Gaussian Thompson posterior on normalized rewards.
pub const THOMPSON_SIGMA0: f64 = 1.0;
/// Lower bound on normalized multiplicative weights.
const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    #[serde(rename = "ucb-exp3-ftrl")]
    UcbExp3Ftrl,
    #[serde(rename = "ts-exp3")]
    TsExp3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expert {
    Ucb,
    Exp3,
    Ftrl,
    Thompson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertConfig {
    pub eta: f64,
    pub ucb_c: f64,
    pub temp0: f64,
    pub temp_decay: f64,
    pub rho0: f64,
    /// FTRL exploration bonus coefficient.
    pub gamma: f64,
    pub p_min: f64,
    pub variant: Variant,
}

impl ExpertConfig {
    /// Defaults for a problem of size `n`.
    pub fn for_variant(variant: Variant, n: usize) -> Self {
        let ts = variant == Variant::TsExp3;
        Self {
            eta: 0.5,
            ucb_c: 3.0,
            temp0: 1.0,
            temp_decay: if ts { 0.995 } else { 0.98 },
            rho0: if ts { 0.0 } else { 0.3 },
            gamma: 1.0 / (n.max(1) as f64).sqrt(),
            p_min: 0.01,
            variant,
        }
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        let fail = |field: &str, reason: String| Err(Error::config(field, reason));
        if !(self.eta > 0.0) {
            return fail("eta", format!("must be positive, got {}", self.eta));
        }
        if !(self.ucb_c >= 0.0) {
            return fail("ucb_c", format!("must be non-negative, got {}", self.ucb_c));
        }
        if !(self.temp0 > 0.0) {
            return fail("temp0", format!("must be positive, got {}", self.temp0));
        }
        if !(self.temp_decay > 0.0 && self.temp_decay <= 1.0) {
            return fail(
                "temp_decay",
                format!("must lie in (0, 1], got {}", self.temp_decay),
            );
        }
        if !(0.0..1.0).contains(&self.rho0) {
            return fail("rho0", format!("must lie in [0, 1), got {}", self.rho0));
        }
        if !(self.gamma >= 0.0) {
            return fail("gamma", format!("must be non-negative, got {}", self.gamma));
        }
        let p_max = 1.0 / arity.max(1) as f64;
        if !(self.p_min > 0.0 && self.p_min <= p_max) {
            return fail(
                "p_min",
                format!("must lie in (0, {p_max}], got {}", self.p_min),
            );
        }
        Ok(())
    }

    /// FTRL share of the mixture; the Thompson variant runs without FTRL.
    pub fn ftrl_rate(&self) -> f64 {
        match self.variant {
            Variant::UcbExp3Ftrl => self.rho0,
            Variant::TsExp3 => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpertStats {
    n: usize,
    arity: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
    weights: Vec<f64>,
    losses: Vec<f64>,
    rounds: u64,
    reward_range: Option<(f64, f64)>,
    temperature: f64,
}

impl ExpertStats {
    pub fn new(n: usize, arity: usize, temp0: f64) -> Self {
        let cells = n * arity;
        Self {
            n,
            arity,
            values: vec![0.0; cells],
            visits: vec![0; cells],
            weights: vec![1.0 / arity as f64; cells],
            losses: vec![0.0; cells],
            rounds: 0,
            reward_range: None,
            temperature: temp0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn row<T>(&self, table: &'_ [T], i: usize) -> std::ops::Range<usize> {
        debug_assert_eq!(table.len(), self.n * self.arity);
        i * self.arity..(i + 1) * self.arity
    }

    pub fn value_row(&self, i: usize) -> &[f64] {
        &self.values[self.row(&self.values, i)]
    }

    pub fn visit_row(&self, i: usize) -> &[u64] {
        &self.visits[self.row(&self.visits, i)]
    }

    /// Normalized multiplicative weights.
    pub fn weight_row(&self, i: usize) -> &[f64] {
        &self.weights[self.row(&self.weights, i)]
    }

    pub fn loss_row(&self, i: usize) -> &[f64] {
        &self.losses[self.row(&self.losses, i)]
    }

    /// Number of observations so far.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn reward_range(&self) -> Option<(f64, f64)> {
        self.reward_range
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn decay_temperature(&mut self, cfg: &ExpertConfig) {
        self.temperature *= cfg.temp_decay;
    }

    #[cfg(test)]
    pub(crate) fn set_row(&mut self, i: usize, v: &[f64], n: &[u64], w: &[f64], l: &[f64]) {
        let r = i * self.arity..(i + 1) * self.arity;
        self.values[r.clone()].copy_from_slice(v);
        self.visits[r.clone()].copy_from_slice(n);
        self.weights[r.clone()].copy_from_slice(w);
        self.losses[r].copy_from_slice(l);
    }

    #[cfg(test)]
    pub(crate) fn set_rounds(&mut self, t: u64) {
        self.rounds = t;
    }

    /// Per-position top-3 actions by value estimate.
    pub fn snapshot(&self) -> StatsSnapshot {
        let positions = (0..self.n)
            .map(|i| {
                let v = self.value_row(i);
                let mut order: Vec<usize> = (0..self.arity).collect();
                order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
                order
                    .into_iter()
                    .take(3)
                    .map(|a| ActionSummary {
                        action: a,
                        value: v[a],
                        visits: self.visit_row(i)[a],
                        weight: self.weight_row(i)[a],
                    })
                    .collect()
            })
            .collect();
        StatsSnapshot {
            rounds: self.rounds,
            temperature: self.temperature,
            positions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSummary {
    pub action: usize,
    pub value: f64,
    pub visits: u64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub rounds: u64,
    pub temperature: f64,
    pub positions: Vec<Vec<ActionSummary>>,
}

/// `(1 + log(1 + mean_a N_ia))^-1`
pub fn uncertainty(i: usize, stats: &ExpertStats) -> f64 {
    let row = stats.visit_row(i);
    let mean = row.iter().sum::<u64>() as f64 / row.len() as f64;
    1.0 / (1.0 + mean.ln_1p())
}

/// Probabilities of the three expert slots: optimistic (UCB or Thompson),
/// EXP3, FTRL.
pub fn mixture_probs(u: f64, rho0: f64) -> [f64; 3] {
    let rest = 1.0 - rho0;
    [rest * u / 2.0, rest * (1.0 - u / 2.0), rho0]
}

fn check_mask(i: usize, stats: &ExpertStats, mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::EmptyMask(i));
    }
    if let Some(&a) = mask.iter().find(|&&a| a >= stats.arity) {
        return Err(Error::Parameter(format!(
            "action {a} outside arity {}",
            stats.arity
        )));
    }
    Ok(())
}

/// First masked action with the largest score; `NaN` never wins.
fn argmax_by(mask: &[usize], mut score: impl FnMut(usize) -> f64) -> usize {
    let mut best = mask[0];
    let mut best_score = score(best);
    for &a in &mask[1..] {
        let s = score(a);
        if s > best_score || (best_score.is_nan() && !s.is_nan()) {
            best = a;
            best_score = s;
        }
    }
    best
}

pub fn select_ucb(
    i: usize,
    stats: &ExpertStats,
    cfg: &ExpertConfig,
    mask: &[usize],
) -> Result<usize> {
    check_mask(i, stats, mask)?;
    let n = stats.visit_row(i);
    if let Some(&a) = mask.iter().find(|&&a| n[a] == 0) {
        return Ok(a);
    }
    let v = stats.value_row(i);
    let log_t = (stats.rounds.max(1) as f64).ln();
    Ok(argmax_by(mask, |a| {
        v[a] + cfg.ucb_c * (log_t / n[a] as f64).sqrt()
    }))
}

/// Samples from `softmax(log W_i / T)` restricted to `mask`.
pub fn select_exp3<R: Rng + ?Sized>(
    i: usize,
    stats: &ExpertStats,
    mask: &[usize],
    rng: &mut R,
) -> Result<usize> {
    check_mask(i, stats, mask)?;
    let w = stats.weight_row(i);
    let t = stats.temperature;
    let logits: Vec<f64> = mask.iter().map(|&a| w[a].ln() / t).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let probs = logits.iter().map(|l| (l - top).exp());
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::Parameter(format!("exp3 distribution: {e}")))?;
    Ok(mask[dist.sample(rng)])
}

/// `argmax (-L + gamma * sqrt(N + 1) - penalty)`.
pub fn select_ftrl(
    i: usize,
    stats: &ExpertStats,
    cfg: &ExpertConfig,
    mask: &[usize],
    penalty: f64,
) -> Result<usize> {
    check_mask(i, stats, mask)?;
    let l = stats.loss_row(i);
    let n = stats.visit_row(i);
    Ok(argmax_by(mask, |a| {
        -l[a] + cfg.gamma * (n[a] as f64 + 1.0).sqrt() - penalty
    }))
}

/// Argmax of one draw from `Normal(V_ia, sigma0^2 / (N_ia + 1))` per action.
pub fn select_thompson<R: Rng + ?Sized>(
    i: usize,
    stats: &ExpertStats,
    mask: &[usize],
    rng: &mut R,
) -> Result<usize> {
    check_mask(i, stats, mask)?;
    let v = stats.value_row(i);
    let n = stats.visit_row(i);
    Ok(argmax_by(mask, |a| {
        let z: f64 = rng.sample(StandardNormal);
        v[a] + THOMPSON_SIGMA0 / (n[a] as f64 + 1.0).sqrt() * z
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Selection {
    pub action: usize,
    pub expert: Expert,
}

/// Samples an expert from the mixture and lets it choose. FTRL sees the
/// coordination penalty `(k_i - 1) * lambda_i`.
#[allow(clippy::too_many_arguments)]
pub fn select_action<R: Rng + ?Sized>(
    i: usize,
    stats: &ExpertStats,
    cfg: &ExpertConfig,
    mask: &[usize],
    lambda_i: f64,
    k_i: usize,
    rng: &mut R,
) -> Result<Selection> {
    check_mask(i, stats, mask)?;
    let p = mixture_probs(uncertainty(i, stats), cfg.ftrl_rate());
    let draw: f64 = rng.random();
    let expert = if draw < p[0] {
        match cfg.variant {
            Variant::UcbExp3Ftrl => Expert::Ucb,
            Variant::TsExp3 => Expert::Thompson,
        }
    } else if draw < p[0] + p[1] || cfg.variant == Variant::TsExp3 {
        Expert::Exp3
    } else {
        Expert::Ftrl
    };
    let action = match expert {
        Expert::Ucb => select_ucb(i, stats, cfg, mask)?,
        Expert::Exp3 => select_exp3(i, stats, mask, rng)?,
        Expert::Ftrl => {
            let penalty = crate::coordination::score_penalty(lambda_i, k_i);
            select_ftrl(i, stats, cfg, mask, penalty)?
        }
        Expert::Thompson => select_thompson(i, stats, mask, rng)?,
    };
    Ok(Selection { action, expert })
}

/// Folds `r_raw` into the running range and maps it to `[-1, 1]`.
pub fn normalize_reward(r_raw: f64, stats: &mut ExpertStats) -> f64 {
    let (lo, hi) = match stats.reward_range {
        None => (r_raw, r_raw),
        Some((lo, hi)) => (lo.min(r_raw), hi.max(r_raw)),
    };
    stats.reward_range = Some((lo, hi));
    if hi > lo {
        (2.0 * (r_raw - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Clipped importance-weighted update of every expert's tables from one
/// full-bandit observation. Returns the normalized reward.
pub fn update_experts(
    stats: &mut ExpertStats,
    x: &Solution,
    r_raw: f64,
    cfg: &ExpertConfig,
) -> Result<f64> {
    crate::error::check_dims(stats.n, x.len())?;
    if let Some(&a) = x.values().iter().find(|&&a| a >= stats.arity) {
        return Err(Error::Parameter(format!(
            "action {a} outside arity {}",
            stats.arity
        )));
    }
    let r = normalize_reward(r_raw, stats);
    apply_update(stats, x.values(), r, cfg);
    Ok(r)
}

fn apply_update(stats: &mut ExpertStats, actions: &[usize], r: f64, cfg: &ExpertConfig) {
    stats.rounds += 1;
    let a_n = stats.arity;
    let n = stats.n as f64;
    for (i, &a) in actions.iter().enumerate() {
        let row = i * a_n..(i + 1) * a_n;
        let c = i * a_n + a;
        stats.visits[c] += 1;
        let row_sum: f64 = stats.weights[row.clone()].iter().sum();
        let p = (stats.weights[c] / row_sum).max(cfg.p_min);
        let r_hat = r / p;
        let l_hat = ((1.0 - r) / p).min(LOSS_CAP);
        stats.values[c] += (r - stats.values[c]) / stats.visits[c] as f64;
        stats.weights[c] *= (cfg.eta * r_hat / n).exp();
        stats.losses[c] += l_hat;
        normalize_row(&mut stats.weights[row]);
    }
}

fn normalize_row(w: &mut [f64]) {
    let sum: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x = (*x / sum).max(WEIGHT_FLOOR);
    }
    let sum: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= sum;
    }
}
