use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::{finish, regret_trace, weight_rng, weights_for, RunConfig, RunResult, WeightResult};
use crate::coordination::{soft_violation, DualState};
use crate::decomposition::{knn_subproblem, sliding_window, Decomposition};
use crate::experts::{select_action, update_experts, ExpertConfig, ExpertStats};
use crate::localsearch::{LocalSearch, Scored};
use crate::pareto::ParetoArchive;
use crate::problems::{Domain, Problem, Solution};
use crate::scalarization::{Scalarizer, WeightVector};
use crate::Result;

/// Decomposed position-wise bandit search, one independent task per
/// weight vector. The best solution of every round (a restart after
/// `patience` stalled iterations) is offered to the archive.
pub fn run_dnl(problem: &dyn Problem, cfg: &RunConfig) -> Result<RunResult> {
    let started = Instant::now();
    let cfg = cfg.resolved(problem)?;
    let weights = weights_for(problem.num_objectives(), cfg.weights)?;
    let distance = if cfg.decomposition.knn && problem.uses_knn_refinement() {
        problem.index_distance()
    } else {
        None
    };
    let outcomes: Vec<(WeightResult, Vec<Scored>)> = weights
        .par_iter()
        .enumerate()
        .map(|(k, w)| run_weight(problem, &cfg, distance.as_deref(), w, k))
        .collect::<Result<_>>()?;

    let mut archive = ParetoArchive::new(problem.sense());
    let mut evals = 0;
    let mut per_weight = Vec::with_capacity(outcomes.len());
    for (summary, round_bests) in outcomes {
        for best in round_bests.into_iter().filter(|b| b.feasible) {
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

struct Learner<'a> {
    cfg: &'a ExpertConfig,
    stats: ExpertStats,
    evals: u64,
}

impl Learner<'_> {
    fn observe(&mut self, x: &Scored) -> Result<()> {
        self.evals += 1;
        update_experts(&mut self.stats, &x.solution, x.reward, self.cfg)?;
        Ok(())
    }
}

/// Fills positions left to right with expert choices among the admissible
/// actions, then repairs.
fn construct<R: Rng>(
    problem: &dyn Problem,
    learner: &Learner,
    dual: &DualState,
    decomp: &Decomposition,
    rng: &mut R,
) -> Result<Solution> {
    let n = problem.size();
    let mut prefix = Vec::with_capacity(n);
    let mut mask = Vec::new();
    for i in 0..n {
        problem.admissible(i, &prefix, &mut mask);
        let pick = select_action(
            i,
            &learner.stats,
            learner.cfg,
            &mask,
            dual.lambda()[i],
            decomp.multiplicity(i),
            rng,
        )?;
        prefix.push(pick.action);
    }
    let mut x = Solution::from_raw(problem.domain(), prefix);
    problem.repair(&mut x);
    Ok(x)
}

/// Positions currently holding the `s` values nearest to `center`.
fn knn_positions(d: &[Vec<f64>], center: usize, s: usize, x: &Solution) -> Result<Vec<usize>> {
    let near = knn_subproblem(d, center, s)?.indices;
    if x.domain() != Domain::Permutation {
        return Ok(near);
    }
    let mut pos = vec![0; x.len()];
    for (i, &v) in x.values().iter().enumerate() {
        pos[v] = i;
    }
    let mut out: Vec<usize> = near.into_iter().map(|v| pos[v]).collect();
    out.sort_unstable();
    Ok(out)
}

fn run_weight(
    problem: &dyn Problem,
    cfg: &RunConfig,
    distance: Option<&[Vec<f64>]>,
    w: &WeightVector,
    index: usize,
) -> Result<(WeightResult, Vec<Scored>)> {
    let n = problem.size();
    let mut rng = weight_rng(cfg.seed, index);
    let scalarizer = Scalarizer::new(w.clone(), cfg.scheme, problem.sense(), cfg.ideal.clone())?;
    let ls = LocalSearch {
        problem,
        scalarizer: &scalarizer,
        two_opt_prob: cfg.hybrid_ratio,
    };
    let mut learner = Learner {
        cfg: &cfg.experts,
        stats: ExpertStats::new(n, problem.arity(), cfg.experts.temp0),
        evals: 0,
    };
    let mut dual = DualState::with_bounds(n, cfg.dual.alpha0, cfg.dual.eps, cfg.dual.lambda_max);
    let d = &cfg.decomposition;
    let schedule = d.schedule();
    let mut overlap = schedule.at(1).min(d.size - 1);
    let mut decomp = sliding_window(n, d.size, overlap)?;

    let start = |learner: &mut Learner, dual: &DualState, decomp: &Decomposition, rng: &mut _| {
        let x = ls.score(construct(problem, learner, dual, decomp, rng)?)?;
        learner.observe(&x)?;
        Ok::<_, crate::Error>(x)
    };
    let mut current = start(&mut learner, &dual, &decomp, &mut rng)?;
    let mut best = current.clone();
    let mut round_best = current.clone();
    let mut round_bests = Vec::with_capacity(cfg.rounds);
    let mut rounds_used = 1;
    let mut stall = 0;
    let mut rewards = Vec::with_capacity(cfg.iterations);
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut xi = vec![0.0; n];

    for t in 1..=cfg.iterations {
        let o = schedule.at(t).min(d.size - 1);
        if o != overlap {
            overlap = o;
            decomp = sliding_window(n, d.size, o)?;
        }
        let before = current.reward;
        for sp in decomp.subproblems() {
            let r = cfg.refine_rounds.unwrap_or(sp.indices.len());
            ls.refine(&mut current, &sp.indices, r, &mut rng, |c| {
                learner.observe(c)
            })?;
        }
        if let Some(dist) = distance {
            let subset = knn_positions(dist, (t - 1) % n, d.size, &current.solution)?;
            let r = cfg.refine_rounds.unwrap_or(subset.len());
            ls.refine(&mut current, &subset, r, &mut rng, |c| learner.observe(c))?;
        }

        // The current solution's reward is cached, so this costs no evaluation.
        update_experts(
            &mut learner.stats,
            &current.solution,
            current.reward,
            &cfg.experts,
        )?;
        let x = current.solution.values();
        for (i, v) in xi.iter_mut().enumerate() {
            *v = soft_violation(i, &learner.stats, decomp.multiplicity(i), x[i]);
        }
        dual.dual_update(&xi, t)?;
        learner.stats.decay_temperature(&cfg.experts);
        rewards.push(current.reward);
        trace.push(dual.record(t, decomp.overlap_set(), &xi));

        if improves(&current, &round_best) {
            round_best = current.clone();
        }
        if improves(&current, &best) {
            best = current.clone();
        }
        if current.reward > before {
            stall = 0;
        } else {
            stall += 1;
        }
        if stall >= cfg.patience {
            if rounds_used == cfg.rounds {
                break;
            }
            current = start(&mut learner, &dual, &decomp, &mut rng)?;
            round_bests.push(std::mem::replace(&mut round_best, current.clone()));
            rounds_used += 1;
            stall = 0;
        }
    }

    round_bests.push(round_best);
    let summary = WeightResult {
        w: w.as_slice().to_vec(),
        best_f: best.objectives.clone(),
        best_reward: best.reward,
        best_solution: best.solution.values().to_vec(),
        evals: learner.evals,
        iterations: rewards.len(),
        regret_trace: Some(regret_trace(&rewards)?),
        coordination: Some(trace),
    };
    Ok((summary, round_bests))
}

fn improves(x: &Scored, incumbent: &Scored) -> bool {
    x.feasible && (!incumbent.feasible || x.reward > incumbent.reward)
}
