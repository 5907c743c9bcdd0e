use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decomposition::{OverlapSchedule, ScheduleKind};
use crate::experts::{ExpertConfig, Variant};
use crate::problems::{Problem, ProblemKind};
use crate::scalarization::Scheme;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "dnl")]
    Dnl,
    #[serde(rename = "dnl-ts")]
    DnlTs,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "ws-2opt")]
    WsLocal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Dnl,
        Algorithm::DnlTs,
        Algorithm::Random,
        Algorithm::WsLocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dnl => "dnl",
            Algorithm::DnlTs => "dnl-ts",
            Algorithm::Random => "random",
            Algorithm::WsLocal => "ws-2opt",
        }
    }

    fn variant(self) -> Variant {
        match self {
            Algorithm::DnlTs => Variant::TsExp3,
            _ => Variant::UcbExp3Ftrl,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Medium,
    Large,
}

impl Scale {
    /// TSP and CVRP: up to 20 / 50 nodes; KP: up to 50 / 100 items.
    pub fn classify(kind: ProblemKind, n: usize) -> Scale {
        let (small, medium) = match kind {
            ProblemKind::Tsp | ProblemKind::Cvrp => (20, 50),
            ProblemKind::Kp => (50, 100),
        };
        if n <= small {
            Scale::Small
        } else if n <= medium {
            Scale::Medium
        } else {
            Scale::Large
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Window width `s`.
    pub size: usize,
    /// Initial overlap `o0`.
    pub overlap0: usize,
    pub alpha: f64,
    pub beta: f64,
    pub schedule: ScheduleKind,
    /// Add one k-nearest-neighbour subproblem per iteration where the
    /// problem defines a locality.
    pub knn: bool,
}

impl DecompositionConfig {
    pub fn schedule(&self) -> OverlapSchedule {
        OverlapSchedule {
            kind: self.schedule,
            initial: self.overlap0,
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualConfig {
    pub alpha0: f64,
    pub lambda_max: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub scale: Scale,
    pub seed: u64,
    /// Requested number of weight vectors.
    pub weights: usize,
    /// Iteration cap `T` per weight vector.
    pub iterations: usize,
    /// Expert-guided constructions per weight vector.
    pub rounds: usize,
    /// Iterations without improvement before a round ends.
    pub patience: usize,
    pub scheme: Scheme,
    /// Ideal point for Tchebycheff scalarization.
    pub ideal: Option<Vec<f64>>,
    /// Probability of a segment reversal in permutation moves.
    pub hybrid_ratio: f64,
    /// Local-search evaluations per subproblem; the subproblem size when unset.
    pub refine_rounds: Option<usize>,
    /// Evaluation budget of the baselines; the nominal budget of the
    /// decomposed run when unset.
    pub budget: Option<u64>,
    pub decomposition: DecompositionConfig,
    pub experts: ExpertConfig,
    pub dual: DualConfig,
}

impl RunConfig {
    /// Table defaults for the given scale.
    pub fn defaults(algorithm: Algorithm, scale: Scale, n: usize) -> Self {
        let (size, overlap0, iterations, rounds, patience) = match scale {
            Scale::Small => (15, 6, 100, 5, 10),
            Scale::Medium => (25, 11, 150, 10, 20),
            Scale::Large => (35, 18, 200, 20, 50),
        };
        RunConfig {
            algorithm,
            scale,
            seed: 0,
            weights: 20,
            iterations,
            rounds,
            patience,
            scheme: Scheme::Ws,
            ideal: None,
            hybrid_ratio: 0.5,
            refine_rounds: None,
            budget: None,
            decomposition: DecompositionConfig {
                size,
                overlap0,
                alpha: 0.5,
                beta: 0.1,
                schedule: ScheduleKind::Polynomial,
                knn: true,
            },
            experts: ExpertConfig::for_variant(algorithm.variant(), n),
            dual: DualConfig {
                alpha0: 1.0,
                lambda_max: crate::coordination::LAMBDA_MAX,
                eps: crate::coordination::LAMBDA_EPS,
            },
        }
    }

    /// Defaults for a benchmark family of size `n`.
    pub fn for_problem(algorithm: Algorithm, kind: ProblemKind, n: usize) -> Self {
        Self::defaults(algorithm, Scale::classify(kind, n), n)
    }

    /// Applies a partial JSON object on top of this config. Nested objects
    /// merge field by field; unknown or mistyped fields are rejected with
    /// their path.
    pub fn with_overrides(&self, overrides: &Value) -> Result<Self> {
        if !overrides.is_object() {
            return Err(Error::config("<root>", "overrides must be a JSON object"));
        }
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overrides);
        serde_path_to_error::deserialize(base).map_err(|e| {
            let path = e.path().to_string();
            Error::config(&path, e.into_inner().to_string())
        })
    }

    /// Checks invariants against `problem` and clamps the window and
    /// overlap to what the problem size allows.
    pub fn resolved(&self, problem: &dyn Problem) -> Result<Self> {
        let n = problem.size();
        let mut cfg = self.clone();
        if cfg.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if cfg.weights == 0 {
            return Err(Error::config("weights", "must be at least 1"));
        }
        if cfg.rounds == 0 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        if cfg.patience == 0 {
            return Err(Error::config("patience", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&cfg.hybrid_ratio) {
            return Err(Error::config("hybrid_ratio", "must lie in [0, 1]"));
        }
        let d = &mut cfg.decomposition;
        if d.size == 0 {
            return Err(Error::config("decomposition.size", "must be at least 1"));
        }
        if !(d.alpha >= 0.0) {
            return Err(Error::config("decomposition.alpha", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&d.beta) {
            return Err(Error::config("decomposition.beta", "must lie in [0, 1)"));
        }
        d.size = d.size.min(n);
        d.overlap0 = d.overlap0.min(d.size - 1);
        if problem.domain() == crate::problems::Domain::Permutation && d.size < 2 {
            return Err(Error::config(
                "decomposition.size",
                "permutation problems need windows of at least 2",
            ));
        }
        let dual = &cfg.dual;
        if !(dual.alpha0 > 0.0) {
            return Err(Error::config("dual.alpha0", "must be positive"));
        }
        if !(dual.eps > 0.0 && dual.eps < dual.lambda_max) {
            return Err(Error::config("dual.eps", "must lie in (0, lambda_max)"));
        }
        cfg.experts.validate(problem.arity()).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: format!("experts.{field}"),
                reason,
            },
            other => other,
        })?;
        if cfg.scheme == Scheme::Tch {
            match &cfg.ideal {
                None => {
                    return Err(Error::config(
                        "ideal",
                        "tch scalarization needs an ideal point",
                    ))
                }
                Some(z) if z.len() != problem.num_objectives() => {
                    return Err(Error::config(
                        "ideal",
                        format!("expected {} coordinates", problem.num_objectives()),
                    ))
                }
                _ => {}
            }
        }
        Ok(cfg)
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}
