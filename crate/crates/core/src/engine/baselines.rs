use std::time::Instant;

use rayon::prelude::*;

use super::{finish, nominal_budget, weight_rng, weights_for, RunConfig, RunResult, WeightResult};
use crate::localsearch::{neighbourhood, LocalSearch, Scored};
use crate::pareto::ParetoArchive;
use crate::problems::Problem;
use crate::scalarization::Scalarizer;
use crate::Result;

fn budget(problem: &dyn Problem, cfg: &RunConfig) -> Result<u64> {
    match cfg.budget {
        Some(b) => Ok(b),
        None => nominal_budget(problem, cfg),
    }
}

/// Uniformly random feasible solutions; every evaluation is offered to the
/// archive.
pub fn run_random(problem: &dyn Problem, cfg: &RunConfig) -> Result<RunResult> {
    let started = Instant::now();
    let cfg = cfg.resolved(problem)?;
    let budget = budget(problem, &cfg)?;
    let mut rng = weight_rng(cfg.seed, 0);
    let mut archive = ParetoArchive::new(problem.sense());
    for _ in 0..budget {
        let x = problem.random_solution(&mut rng);
        let eval = problem.evaluate(&x)?;
        if eval.feasible {
            archive.insert(x, eval.objectives);
        }
    }
    Ok(finish(
        cfg,
        problem.sense(),
        archive,
        Vec::new(),
        budget,
        started,
    ))
}

/// Weighted-sum restarts of steepest-ascent hill climbing over swaps and
/// segment reversals (bit flips with repair for binary problems). The budget
/// is split evenly across weight vectors.
pub fn run_ws_local(problem: &dyn Problem, cfg: &RunConfig) -> Result<RunResult> {
    let started = Instant::now();
    let cfg = cfg.resolved(problem)?;
    let budget = budget(problem, &cfg)?;
    let weights = weights_for(problem.num_objectives(), cfg.weights)?;
    let count = weights.len() as u64;
    let outcomes: Vec<Option<(WeightResult, Scored)>> = weights
        .par_iter()
        .enumerate()
        .map(|(k, w)| {
            let share = budget / count + u64::from((k as u64) < budget % count);
            if share == 0 {
                return Ok(None);
            }
            let scalarizer =
                Scalarizer::new(w.clone(), cfg.scheme, problem.sense(), cfg.ideal.clone())?;
            let ls = LocalSearch {
                problem,
                scalarizer: &scalarizer,
                two_opt_prob: cfg.hybrid_ratio,
            };
            let mut rng = weight_rng(cfg.seed, k);
            let (best, restarts) = climb_with_restarts(&ls, share, &mut rng)?;
            let summary = WeightResult {
                w: w.as_slice().to_vec(),
                best_f: best.objectives.clone(),
                best_reward: best.reward,
                best_solution: best.solution.values().to_vec(),
                evals: share,
                iterations: restarts,
                regret_trace: None,
                coordination: None,
            };
            Ok(Some((summary, best)))
        })
        .collect::<Result<_>>()?;

    let mut archive = ParetoArchive::new(problem.sense());
    let mut per_weight = Vec::new();
    let mut evals = 0;
    for (summary, best) in outcomes.into_iter().flatten() {
        if best.feasible {
            archive.insert(best.solution, best.objectives);
        }
        evals += summary.evals;
        per_weight.push(summary);
    }
    Ok(finish(
        cfg,
        problem.sense(),
        archive,
        per_weight,
        evals,
        started,
    ))
}

/// Spends exactly `budget` evaluations; returns the best solution and the
/// number of restarts begun.
fn climb_with_restarts(
    ls: &LocalSearch,
    budget: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(Scored, usize)> {
    let problem = ls.problem;
    let mut spent = 0;
    let mut best: Option<Scored> = None;
    let mut restarts = 0;
    while spent < budget {
        restarts += 1;
        let mut x = ls.score(problem.random_solution(rng))?;
        spent += 1;
        loop {
            let mut step: Option<Scored> = None;
            for mv in neighbourhood(&x.solution) {
                if spent == budget {
                    break;
                }
                let mut y = x.solution.clone();
                mv.apply(&mut y);
                problem.repair(&mut y);
                let y = ls.score(y)?;
                spent += 1;
                let target = step.as_ref().map_or(x.reward, |s| s.reward);
                if y.feasible && y.reward > target {
                    step = Some(y);
                }
            }
            match step {
                Some(y) => x = y,
                None => break,
            }
            if spent == budget {
                break;
            }
        }
        let better = match &best {
            None => true,
            Some(b) => x.feasible && (!b.feasible || x.reward > b.reward),
        };
        if better {
            best = Some(x);
        }
    }
    Ok((best.expect("budget is positive"), restarts))
}
