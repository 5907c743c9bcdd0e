//! `dnl` command line: instance generation, optimization runs, front
//! evaluation and run comparison.
//!
//! Exit codes: 0 success, 1 IO or runtime failure, 2 usage error. Output
//! files are written only after all work has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dnl::engine::{run, Algorithm, RunConfig, RunResult};
use dnl::pareto::{evaluate_front, front_to_csv, standard_frame, standard_frame_names, HvFrame};
use dnl::problems::{gen_cvrp, gen_kp, gen_tsp, Instance};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(
    name = "dnl",
    version,
    about = "Decomposed bandit search for multi-objective combinatorial problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark instance file
    Gen(GenArgs),
    /// Optimize an instance and write the result file
    Run(RunArgs),
    /// Hypervolume metrics of a result file
    Eval(EvalArgs),
    /// Side-by-side metrics of several result files on one instance
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Tsp,
    Kp,
    Cvrp,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Cities, items or customers
    #[arg(long)]
    n: usize,
    /// Number of objectives (CVRP is always 2)
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Knapsack or vehicle capacity; defaults to the standard value for n
    #[arg(long)]
    capacity: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = PossibleValuesParser::new(Algorithm::ALL.map(Algorithm::name)))]
    algo: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Number of weight vectors
    #[arg(long)]
    weights: Option<usize>,
    /// Iterations per round
    #[arg(long)]
    iters: Option<usize>,
    /// Evaluation budget for the random and ws-2opt baselines
    #[arg(long)]
    budget: Option<u64>,
    /// JSON object overriding the scale defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for per-weight tasks; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Per-iteration coordination trace CSV (dnl and dnl-ts only)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrameArgs {
    /// Built-in reference/ideal frame, e.g. bitsp20
    #[arg(long, conflicts_with_all = ["reference", "ideal"])]
    paper_frame: Option<String>,
    /// Reference point, comma separated
    #[arg(long = "ref", value_delimiter = ',', requires = "ideal")]
    reference: Option<Vec<f64>>,
    /// Ideal point, comma separated
    #[arg(long, value_delimiter = ',', requires = "reference")]
    ideal: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[command(flatten)]
    frame: FrameArgs,
    /// Write the metrics as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the front as CSV
    #[arg(long)]
    front_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Result files of runs on the same instance
    #[arg(required = true, num_args = 2..)]
    runs: Vec<PathBuf>,
    #[command(flatten)]
    frame: FrameArgs,
    /// Write the table as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type Outcome<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> Failure {
    Failure::Runtime(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Fails unless the directory that will hold `path` exists.
fn check_out(path: &Path) -> Outcome<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if dir.is_dir() {
        Ok(())
    } else {
        Err(runtime(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}

/// Writes through a sibling temporary file so readers never see a
/// truncated result.
fn write_atomic(path: &Path, contents: &str) -> Outcome<()> {
    let name = path
        .file_name()
        .ok_or_else(|| usage(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            runtime(format!("writing {}: {e}", path.display()))
        })
}

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| runtime(format!("reading {}: {e}", path.display())))
}

fn cmd_gen(a: &GenArgs) -> Outcome<()> {
    check_out(&a.out)?;
    let bad = |e: dnl::Error| usage(e.to_string());
    let inst = match a.problem {
        ProblemArg::Tsp => {
            if a.capacity.is_some() {
                return Err(usage("--capacity does not apply to tsp"));
            }
            Instance::Tsp(gen_tsp(a.n, a.m, a.seed).map_err(bad)?)
        }
        ProblemArg::Kp => Instance::Kp(gen_kp(a.n, a.m, a.seed, a.capacity).map_err(bad)?),
        ProblemArg::Cvrp => {
            if a.m != 2 {
                return Err(usage("cvrp instances always have 2 objectives"));
            }
            let capacity = match a.capacity {
                None => None,
                Some(c) if c >= 1.0 && c.fract() == 0.0 && c <= f64::from(u32::MAX) => {
                    Some(c as u32)
                }
                Some(c) => {
                    return Err(usage(format!(
                        "cvrp capacity must be a positive integer, got {c}"
                    )))
                }
            };
            Instance::Cvrp(gen_cvrp(a.n, a.seed, capacity).map_err(bad)?)
        }
    };
    let text = inst.to_json().map_err(|e| runtime(e.to_string()))?;
    write_atomic(&a.out, &text)?;
    let id = inst.id();
    let mut line = format!(
        "problem={} n={} m={} seed={}",
        id.problem, id.n, id.m, id.seed
    );
    match &inst {
        Instance::Kp(k) => write!(line, " capacity={}", k.capacity).unwrap(),
        Instance::Cvrp(c) => write!(line, " capacity={}", c.capacity).unwrap(),
        Instance::Tsp(_) => {}
    }
    println!("{line} out={}", a.out.display());
    Ok(())
}

fn load_instance(path: &Path) -> Outcome<Instance> {
    let text = read_text(path)?;
    Instance::from_json(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Scale defaults, then the config file, then individual flags.
fn build_config(a: &RunArgs, inst: &Instance, algo: Algorithm) -> Outcome<RunConfig> {
    let mut cfg = RunConfig::for_problem(algo, inst.kind(), inst.as_problem().size());
    if let Some(path) = &a.config {
        let text = read_text(path)?;
        let overrides: Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        cfg = cfg
            .with_overrides(&overrides)
            .map_err(|e| usage(e.to_string()))?;
        // The algorithm always comes from --algo.
        cfg.algorithm = algo;
    }
    cfg.seed = a.seed;
    if let Some(w) = a.weights {
        cfg.weights = w;
    }
    if let Some(t) = a.iters {
        cfg.iterations = t;
    }
    if let Some(b) = a.budget {
        cfg.budget = Some(b);
    }
    cfg.resolved(inst.as_problem())
        .map_err(|e| usage(e.to_string()))
}

fn cmd_run(a: &RunArgs) -> Outcome<()> {
    let algo: Algorithm = a
        .algo
        .parse()
        .map_err(|e: dnl::Error| usage(e.to_string()))?;
    let learned = matches!(algo, Algorithm::Dnl | Algorithm::DnlTs);
    if a.trace.is_some() && !learned {
        return Err(usage("--trace needs algo dnl or dnl-ts"));
    }
    check_out(&a.out)?;
    if let Some(t) = &a.trace {
        check_out(t)?;
    }
    let inst = load_instance(&a.instance)?;
    let cfg = build_config(a, &inst, algo)?;
    let cfg_line = serde_json::to_string(&cfg).map_err(|e| runtime(e.to_string()))?;
    println!("config={cfg_line}");

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| runtime(e.to_string()))?;
    let mut result = pool
        .install(|| run(inst.as_problem(), &cfg))
        .map_err(|e| runtime(e.to_string()))?;
    result.instance = Some(inst.id());

    let text = result.to_json().map_err(|e| runtime(e.to_string()))?;
    let trace = a.trace.as_ref().map(|_| trace_csv(&result));
    write_atomic(&a.out, &text)?;
    if let (Some(path), Some(csv)) = (&a.trace, trace) {
        write_atomic(path, &csv)?;
    }
    println!(
        "algo={} evals={} wall_ms={} nds={} out={}",
        algo,
        result.evals,
        result.wall_ms,
        result.pareto_front.len(),
        a.out.display()
    );
    Ok(())
}

fn trace_csv(r: &RunResult) -> String {
    let mut out = String::from("weight,t,mean_lambda,sum_xi,min_lambda,max_lambda\n");
    for (k, w) in r.per_weight.iter().enumerate() {
        for c in w.coordination.iter().flatten() {
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                c.t, c.mean_lambda, c.sum_xi, c.min_lambda, c.max_lambda
            )
            .unwrap();
        }
    }
    out
}

fn load_run(path: &Path) -> Outcome<RunResult> {
    let text = read_text(path)?;
    RunResult::from_json(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn resolve_frame(f: &FrameArgs, run: &RunResult) -> Outcome<HvFrame> {
    let frame = match (&f.paper_frame, &f.reference, &f.ideal) {
        (Some(name), _, _) => standard_frame(name).ok_or_else(|| {
            usage(format!(
                "unknown frame `{name}`; known frames: {}",
                standard_frame_names().join(", ")
            ))
        })?,
        (None, Some(r), Some(z)) => {
            HvFrame::new(r.clone(), z.clone(), run.sense).map_err(|e| usage(e.to_string()))?
        }
        _ => return Err(usage("pass --paper-frame or both --ref and --ideal")),
    };
    if frame.sense != run.sense {
        return Err(usage(format!(
            "frame is for {:?} problems but the run is {:?}",
            frame.sense, run.sense
        )));
    }
    if let Some(p) = run.pareto_front.first() {
        if p.len() != frame.reference.len() {
            return Err(usage(format!(
                "frame has {} objectives but the front has {}",
                frame.reference.len(),
                p.len()
            )));
        }
    }
    Ok(frame)
}

fn cmd_eval(a: &EvalArgs) -> Outcome<()> {
    for path in a.out.iter().chain(&a.front_csv) {
        check_out(path)?;
    }
    let run = load_run(&a.run)?;
    let frame = resolve_frame(&a.frame, &run)?;
    let report = evaluate_front(&run.pareto_front, &frame).map_err(|e| runtime(e.to_string()))?;
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| runtime(e.to_string()))?;
        write_atomic(path, &text)?;
    }
    if let Some(path) = &a.front_csv {
        write_atomic(path, &front_to_csv(&run.pareto_front))?;
    }
    println!(
        "hv={} hv_ratio={} nds={}",
        report.hv, report.hv_ratio, report.nds
    );
    Ok(())
}

fn describe(r: &RunResult) -> String {
    match &r.instance {
        Some(id) => format!("{} n={} m={} seed={}", id.problem, id.n, id.m, id.seed),
        None => "an unrecorded instance".into(),
    }
}

struct Row {
    run: String,
    algo: Algorithm,
    seed: u64,
    hv_ratio: f64,
    nds: usize,
    evals: u64,
}

fn cmd_compare(a: &CompareArgs) -> Outcome<()> {
    if let Some(path) = &a.csv {
        check_out(path)?;
    }
    let runs = a
        .runs
        .iter()
        .map(|p| load_run(p))
        .collect::<Outcome<Vec<_>>>()?;
    let first = &runs[0];
    for (path, r) in a.runs.iter().zip(&runs).skip(1) {
        if r.instance != first.instance {
            return Err(usage(format!(
                "{} was run on {} but {} on {}",
                path.display(),
                describe(r),
                a.runs[0].display(),
                describe(first)
            )));
        }
    }
    let mut rows = Vec::with_capacity(runs.len());
    for (path, r) in a.runs.iter().zip(&runs) {
        let frame = resolve_frame(&a.frame, r)?;
        let report = evaluate_front(&r.pareto_front, &frame).map_err(|e| runtime(e.to_string()))?;
        rows.push(Row {
            run: path.display().to_string(),
            algo: r.config.algorithm,
            seed: r.config.seed,
            hv_ratio: report.hv_ratio,
            nds: report.nds,
            evals: r.evals,
        });
    }
    let count = rows.len() as f64;
    let mean_hv = rows.iter().map(|r| r.hv_ratio).sum::<f64>() / count;
    let mean_nds = rows.iter().map(|r| r.nds as f64).sum::<f64>() / count;
    let mean_evals = rows.iter().map(|r| r.evals as f64).sum::<f64>() / count;

    let mut csv = String::from("run,algo,seed,hv_ratio,nds,evals\n");
    for r in &rows {
        println!(
            "run={} algo={} seed={} hv_ratio={} nds={} evals={}",
            r.run, r.algo, r.seed, r.hv_ratio, r.nds, r.evals
        );
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.run, r.algo, r.seed, r.hv_ratio, r.nds, r.evals
        )
        .unwrap();
    }
    println!(
        "mean runs={} hv_ratio={mean_hv} nds={mean_nds} evals={mean_evals}",
        rows.len()
    );
    writeln!(csv, "mean,,,{mean_hv},{mean_nds},{mean_evals}").unwrap();
    if let Some(path) = &a.csv {
        write_atomic(path, &csv)?;
    }
    Ok(())
}
