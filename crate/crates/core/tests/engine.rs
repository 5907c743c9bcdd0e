use dnl::engine::{nominal_budget, run, Algorithm, RunConfig, RunResult, Scale};
use dnl::localsearch::neighbourhood;
use dnl::problems::{
    eval_kp, gen_kp, gen_tsp, Instance, KpInstance, Problem, SeparableProblem, Solution,
    TspInstance,
};
use dnl::scalarization::{weighted_sum, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn separable(seed: u64) -> SeparableProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = (0..5)
        .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
        .collect();
    SeparableProblem::new(means).unwrap()
}

fn optimum(p: &SeparableProblem) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(5) {
        let x: Vec<usize> = (0..5).map(|i| code / 3usize.pow(i) % 3).collect();
        let x = Solution::categorical(3, x).unwrap();
        best = best.max(p.evaluate(&x).unwrap().objectives[0]);
    }
    best
}

fn separable_config(seed: u64, iterations: usize) -> RunConfig {
    let mut cfg = RunConfig::defaults(Algorithm::Dnl, Scale::Small, 5);
    cfg.seed = seed;
    cfg.iterations = iterations;
    cfg.patience = iterations;
    cfg
}

#[test]
fn separable_optimum_found() {
    let mut hits = 0;
    for seed in 0..10 {
        let p = separable(seed);
        let r = run(&p, &separable_config(seed, 500)).unwrap();
        if (r.per_weight[0].best_reward - optimum(&p)).abs() < 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 9, "optimum found in {hits}/10 seeds");
}

#[test]
fn regret_flattens_on_separable() {
    let p = separable(3);
    let opt = optimum(&p);
    let r = run(&p, &separable_config(3, 2000)).unwrap();
    let rewards = &r.per_weight[0].regret_trace.as_ref().unwrap().rewards;
    assert_eq!(rewards.len(), 2000);
    let mean_regret = |s: &[f64]| s.iter().map(|x| opt - x).sum::<f64>() / s.len() as f64;
    let early = mean_regret(&rewards[..500]);
    let late = mean_regret(&rewards[1500..]);
    assert!(late <= 0.5 * early + 1e-12, "early {early} late {late}");
    let cumulative = &r.per_weight[0].regret_trace.as_ref().unwrap().cumulative;
    let q = cumulative.len() / 4;
    let first = cumulative[q - 1];
    let last = cumulative[cumulative.len() - 1] - cumulative[cumulative.len() - 1 - q];
    assert!(last <= first);
}

fn strip_wall(mut r: RunResult) -> RunResult {
    r.wall_ms = 0;
    r
}

#[test]
fn runs_are_deterministic() {
    let inst = Instance::Tsp(gen_tsp(12, 2, 5).unwrap());
    let p = inst.as_problem();
    for algo in Algorithm::ALL {
        let mut cfg = RunConfig::for_problem(algo, inst.kind(), p.size());
        cfg.weights = 4;
        cfg.iterations = 20;
        cfg.budget = Some(2_000);
        let a = strip_wall(run(p, &cfg).unwrap()).to_json().unwrap();
        let b = strip_wall(run(p, &cfg).unwrap()).to_json().unwrap();
        assert_eq!(a, b, "{algo}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let inst = Instance::Tsp(gen_tsp(12, 2, 6).unwrap());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::Dnl, inst.kind(), p.size());
    cfg.weights = 6;
    cfg.iterations = 15;
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let wide = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = strip_wall(serial.install(|| run(p, &cfg)).unwrap());
    let b = strip_wall(wide.install(|| run(p, &cfg)).unwrap());
    assert_eq!(a, b);
}

#[test]
fn evaluation_count_matches_budget_without_early_stop() {
    let inst = Instance::Tsp(gen_tsp(20, 2, 1).unwrap());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::Dnl, inst.kind(), p.size());
    cfg.weights = 3;
    cfg.patience = cfg.iterations;
    cfg.rounds = 1;
    let r = run(p, &cfg).unwrap();
    assert_eq!(r.evals, r.per_weight.iter().map(|w| w.evals).sum::<u64>());
    assert_eq!(r.evals, nominal_budget(p, &cfg).unwrap());
}

#[test]
fn early_stopped_runs_stay_within_budget() {
    let inst = Instance::Kp(gen_kp(50, 2, 2, None).unwrap());
    let p = inst.as_problem();
    let cfg = RunConfig::for_problem(Algorithm::DnlTs, inst.kind(), p.size());
    let r = run(p, &cfg).unwrap();
    assert_eq!(r.evals, r.per_weight.iter().map(|w| w.evals).sum::<u64>());
    assert!(r.evals <= nominal_budget(p, &cfg).unwrap());
}

#[test]
fn random_with_zero_budget_is_empty() {
    let inst = Instance::Tsp(gen_tsp(10, 2, 1).unwrap());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::Random, inst.kind(), p.size());
    cfg.budget = Some(0);
    let r = run(p, &cfg).unwrap();
    assert!(r.pareto_front.is_empty());
    assert_eq!(r.evals, 0);
}

#[test]
fn random_spends_the_matched_budget() {
    let inst = Instance::Tsp(gen_tsp(10, 2, 1).unwrap());
    let p = inst.as_problem();
    let cfg = RunConfig::for_problem(Algorithm::Random, inst.kind(), p.size());
    let r = run(p, &cfg).unwrap();
    assert_eq!(r.evals, nominal_budget(p, &cfg).unwrap());
}

fn assert_kp_archive_feasible(kp: &KpInstance, r: &RunResult) {
    assert!(!r.solutions.is_empty());
    for (x, f) in r.solutions.iter().zip(&r.pareto_front) {
        let bits: Vec<bool> = x.iter().map(|&b| b == 1).collect();
        let e = eval_kp(kp, &Solution::binary(&bits)).unwrap();
        assert!(e.feasible);
        assert_eq!(&e.objectives, f);
    }
}

#[test]
fn kp_archives_are_feasible() {
    let kp = gen_kp(30, 2, 4, Some(8.0)).unwrap();
    let inst = Instance::Kp(kp.clone());
    let p = inst.as_problem();
    for algo in Algorithm::ALL {
        let mut cfg = RunConfig::for_problem(algo, inst.kind(), p.size());
        cfg.weights = 5;
        cfg.iterations = 20;
        let r = run(p, &cfg).unwrap();
        assert_kp_archive_feasible(&kp, &r);
    }
}

fn square_tsp() -> TspInstance {
    let corners = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    TspInstance {
        n: 4,
        m: 2,
        seed: 0,
        coords: vec![corners.clone(), corners],
    }
}

#[test]
fn ws_local_solves_the_square() {
    let inst = Instance::Tsp(square_tsp());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::WsLocal, inst.kind(), p.size());
    cfg.weights = 5;
    cfg.budget = Some(200);
    let r = run(p, &cfg).unwrap();
    for w in &r.per_weight {
        assert_eq!(w.best_f, vec![4.0, 4.0]);
    }
    assert_eq!(r.pareto_front, vec![vec![4.0, 4.0]]);
}

#[test]
fn ws_local_matches_exhaustive_kp() {
    let kp = gen_kp(5, 2, 9, Some(2.0)).unwrap();
    let inst = Instance::Kp(kp.clone());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::WsLocal, inst.kind(), p.size());
    cfg.weights = 6;
    cfg.budget = Some(6 * 400);
    let r = run(p, &cfg).unwrap();
    for w in &r.per_weight {
        let w_vec = WeightVector::new(w.w.clone()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for mask in 0..32u32 {
            let bits: Vec<bool> = (0..5).map(|i| mask >> i & 1 == 1).collect();
            let e = eval_kp(&kp, &Solution::binary(&bits)).unwrap();
            if e.feasible {
                best = best.max(weighted_sum(&e.objectives, &w_vec).unwrap());
            }
        }
        let got = weighted_sum(&w.best_f, &w_vec).unwrap();
        assert!(
            (got - best).abs() < 1e-9,
            "w={:?} got {got} want {best}",
            w.w
        );
    }
}

#[test]
fn ws_local_results_are_two_opt_optimal() {
    let tsp = gen_tsp(15, 2, 3).unwrap();
    let inst = Instance::Tsp(tsp);
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::WsLocal, inst.kind(), p.size());
    cfg.weights = 4;
    cfg.budget = Some(4 * 5_000);
    let r = run(p, &cfg).unwrap();
    for w in &r.per_weight {
        let w_vec = WeightVector::new(w.w.clone()).unwrap();
        let x = Solution::permutation(w.best_solution.clone()).unwrap();
        let base = weighted_sum(&p.evaluate(&x).unwrap().objectives, &w_vec).unwrap();
        for mv in neighbourhood(&x) {
            let mut y = x.clone();
            mv.apply(&mut y);
            let f = weighted_sum(&p.evaluate(&y).unwrap().objectives, &w_vec).unwrap();
            assert!(f >= base - 1e-9, "improving move {mv:?}");
        }
    }
}

#[test]
fn coordination_stays_bounded_and_settles() {
    let inst = Instance::Tsp(gen_tsp(20, 2, 0).unwrap());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::Dnl, inst.kind(), p.size());
    cfg.weights = 4;
    let r = run(p, &cfg).unwrap();
    for w in &r.per_weight {
        let trace = w.coordination.as_ref().unwrap();
        for rec in trace {
            assert!(rec.min_lambda >= cfg.dual.eps && rec.max_lambda <= cfg.dual.lambda_max);
        }
        let q = (trace.len() / 4).max(1);
        let head: f64 = trace[..q].iter().map(|c| c.sum_xi).sum();
        let tail: f64 = trace[trace.len() - q..].iter().map(|c| c.sum_xi).sum();
        assert!(tail <= head, "head {head} tail {tail}");
    }
}

#[test]
fn invalid_config_fails_before_running() {
    let inst = Instance::Tsp(gen_tsp(10, 2, 1).unwrap());
    let p = inst.as_problem();
    let mut cfg = RunConfig::for_problem(Algorithm::Dnl, inst.kind(), p.size());
    cfg.iterations = 0;
    assert!(run(p, &cfg).is_err());
}
