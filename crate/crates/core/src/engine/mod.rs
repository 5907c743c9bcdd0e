//! Runs the decomposed bandit optimizer and the baselines over a set of
//! weight vectors and collects a Pareto archive.
//!
//! Each weight vector is an independent task with its own random stream
//! (the run seed with the weight index as ChaCha stream id), so results do
//! not depend on how tasks are scheduled across threads.

mod baselines;
mod config;
mod dnl;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::CoordinationRecord;
use crate::decomposition::sliding_window;
use crate::pareto::ParetoArchive;
use crate::problems::{InstanceId, Problem, Sense};
use crate::scalarization::{gen_weights, WeightVector};
use crate::{Error, Result};

pub use baselines::{run_random, run_ws_local};
pub use config::{Algorithm, DecompositionConfig, DualConfig, RunConfig, Scale};
pub use dnl::run_dnl;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub rewards: Vec<f64>,
    /// `sum_{s <= t} (r* - r_s)` with `r*` the best reward in the sequence.
    pub cumulative: Vec<f64>,
}

pub fn regret_trace(rewards: &[f64]) -> Result<RegretTrace> {
    if rewards.is_empty() {
        return Err(Error::Parameter("regret trace of an empty sequence".into()));
    }
    let best = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cumulative = rewards
        .iter()
        .scan(0.0, |acc, r| {
            *acc += best - r;
            Some(*acc)
        })
        .collect();
    Ok(RegretTrace {
        rewards: rewards.to_vec(),
        cumulative,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightResult {
    pub w: Vec<f64>,
    pub best_f: Vec<f64>,
    pub best_reward: f64,
    pub best_solution: Vec<usize>,
    pub evals: u64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret_trace: Option<RegretTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordination: Option<Vec<CoordinationRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceId>,
    pub sense: Sense,
    pub pareto_front: Vec<Vec<f64>>,
    pub solutions: Vec<Vec<usize>>,
    /// Number of objective evaluations performed.
    pub evals: u64,
    pub wall_ms: u64,
    pub per_weight: Vec<WeightResult>,
}

impl RunResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Runs the configured algorithm.
pub fn run(problem: &dyn Problem, cfg: &RunConfig) -> Result<RunResult> {
    match cfg.algorithm {
        Algorithm::Dnl | Algorithm::DnlTs => run_dnl(problem, cfg),
        Algorithm::Random => run_random(problem, cfg),
        Algorithm::WsLocal => run_ws_local(problem, cfg),
    }
}

/// Weight vectors for `m` objectives; a single-objective problem gets the
/// trivial weight.
pub fn weights_for(m: usize, count: usize) -> Result<Vec<WeightVector>> {
    if m == 1 {
        return Ok(vec![WeightVector::new(vec![1.0])?]);
    }
    gen_weights(m, count)
}

/// Evaluations a decomposed run performs when no round stops early.
pub fn nominal_budget(problem: &dyn Problem, cfg: &RunConfig) -> Result<u64> {
    let cfg = cfg.resolved(problem)?;
    let n = problem.size();
    let d = &cfg.decomposition;
    let schedule = d.schedule();
    let knn = d.knn && problem.uses_knn_refinement();
    let cost = |len: usize| cfg.refine_rounds.unwrap_or(len) as u64;
    let mut per_weight = cfg.rounds as u64;
    let mut cached: Option<(usize, u64)> = None;
    for t in 1..=cfg.iterations {
        let o = schedule.at(t).min(d.size - 1);
        let windows = match cached {
            Some((prev, c)) if prev == o => c,
            _ => {
                let c = sliding_window(n, d.size, o)?
                    .subproblems()
                    .iter()
                    .map(|s| cost(s.indices.len()))
                    .sum();
                cached = Some((o, c));
                c
            }
        };
        per_weight += windows + if knn { cost(d.size) } else { 0 };
    }
    let weights = weights_for(problem.num_objectives(), cfg.weights)?.len() as u64;
    Ok(per_weight * weights)
}

fn weight_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn finish(
    cfg: RunConfig,
    sense: Sense,
    archive: ParetoArchive,
    per_weight: Vec<WeightResult>,
    evals: u64,
    started: Instant,
) -> RunResult {
    let (solutions, pareto_front) = archive
        .entries()
        .iter()
        .map(|e| (e.solution.values().to_vec(), e.objectives.clone()))
        .unzip();
    RunResult {
        config: cfg,
        instance: None,
        sense,
        pareto_front,
        solutions,
        evals,
        wall_ms: started.elapsed().as_millis() as u64,
        per_weight,
    }
}
