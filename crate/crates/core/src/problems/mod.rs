//! Benchmark problems: multi-objective TSP, knapsack and CVRP generators,
//! their objective evaluators, and the [`Problem`] trait the optimizer runs
//! against.
//!
//! # Instance random stream
//!
//! Instances are generated from a portable stream so they can be reproduced
//! in any language:
//!
//! * the generator is xoshiro256\*\* whose 256-bit state is filled by four
//!   successive SplitMix64 outputs of the seed (`x += 0x9E3779B97F4A7C15;
//!   z = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) *
//!   0x94D049BB133111EB; z ^ (z >> 31)`);
//! * a uniform real is `((u >> 11) + 0.5) / 2^53`, strictly inside (0, 1);
//! * a uniform integer on `{1..9}` is `1 + floor(9 * real)`.
//!
//! Draw order is documented on each generator.

mod cvrp;
mod kp;
mod synthetic;
mod tsp;

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use cvrp::{eval_cvrp, gen_cvrp, route_length, split_routes, CvrpInstance};
pub use kp::{eval_kp, gen_kp, repair_kp, repair_kp_within, KpEvaluation, KpInstance};
pub use synthetic::SeparableProblem;
pub use tsp::{eval_tsp, gen_tsp, TspInstance};

/// Version written into and expected from instance files.
pub const SCHEMA_VERSION: u32 = 1;

/// Optimization direction shared by all objectives of a problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// Decision-space family of a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Position `i` holds element `x_i`; the payload is a bijection on `[n]`.
    Permutation,
    /// Position `i` holds 0 or 1.
    Binary,
    /// Position `i` holds a label in `0..arity`.
    Categorical { arity: usize },
}

impl Domain {
    /// Number of actions available per position for a problem of size `n`.
    pub fn arity(self, n: usize) -> usize {
        match self {
            Domain::Permutation => n,
            Domain::Binary => 2,
            Domain::Categorical { arity } => arity,
        }
    }
}

/// A domain-typed decision vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    domain: Domain,
    values: Vec<usize>,
}

impl Solution {
    /// Builds a permutation, rejecting anything that is not a bijection on `[n]`.
    pub fn permutation(values: Vec<usize>) -> Result<Self> {
        check_permutation(&values)?;
        Ok(Self {
            domain: Domain::Permutation,
            values,
        })
    }

    pub fn binary(bits: &[bool]) -> Self {
        Self {
            domain: Domain::Binary,
            values: bits.iter().map(|&b| usize::from(b)).collect(),
        }
    }

    pub fn categorical(arity: usize, values: Vec<usize>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v >= arity) {
            return Err(Error::Domain(format!("label {v} outside 0..{arity}")));
        }
        Ok(Self {
            domain: Domain::Categorical { arity },
            values,
        })
    }

    /// Wraps raw values without validation; callers guarantee the domain invariant.
    pub(crate) fn from_raw(domain: Domain, values: Vec<usize>) -> Self {
        Self { domain, values }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [usize] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Bit view of a binary solution.
    pub fn bit(&self, i: usize) -> bool {
        self.values[i] != 0
    }

    /// Re-checks the domain invariant (used after deserialization).
    pub fn validate(&self) -> Result<()> {
        match self.domain {
            Domain::Permutation => check_permutation(&self.values),
            Domain::Binary => match self.values.iter().find(|&&v| v > 1) {
                Some(v) => Err(Error::Domain(format!("binary payload holds {v}"))),
                None => Ok(()),
            },
            Domain::Categorical { arity } => match self.values.iter().find(|&&v| v >= arity) {
                Some(v) => Err(Error::Domain(format!("label {v} outside 0..{arity}"))),
                None => Ok(()),
            },
        }
    }
}

fn check_permutation(values: &[usize]) -> Result<()> {
    let n = values.len();
    let mut seen = vec![false; n];
    for &v in values {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::Domain(format!(
                "payload is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Objective vector of one solution together with its feasibility.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    pub feasible: bool,
}

/// A black-box multi-objective problem over a position-action decision space.
pub trait Problem: Sync {
    /// Number of decision positions `n`.
    fn size(&self) -> usize;

    fn domain(&self) -> Domain;

    fn num_objectives(&self) -> usize;

    fn sense(&self) -> Sense;

    fn evaluate(&self, x: &Solution) -> Result<Evaluation>;

    /// Makes `x` feasible in place. The default is the identity.
    fn repair(&self, _x: &mut Solution) {}

    /// Repair that only touches the positions in `allowed`.
    fn repair_within(&self, _x: &mut Solution, _allowed: &[usize]) {}

    /// Index-space locality matrix used for k-NN subproblems, when the
    /// problem has a meaningful one.
    fn index_distance(&self) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// Whether k-NN subproblems should supplement the sliding windows.
    fn uses_knn_refinement(&self) -> bool {
        false
    }

    fn arity(&self) -> usize {
        self.domain().arity(self.size())
    }

    /// Writes into `mask` the actions admissible at `position` once the
    /// earlier positions hold `prefix`. Masks are sorted ascending.
    fn admissible(&self, position: usize, prefix: &[usize], mask: &mut Vec<usize>) {
        debug_assert_eq!(position, prefix.len());
        mask.clear();
        match self.domain() {
            Domain::Permutation => {
                let n = self.size();
                let mut used = vec![false; n];
                for &v in prefix {
                    used[v] = true;
                }
                mask.extend((0..n).filter(|&v| !used[v]));
            }
            d => mask.extend(0..d.arity(self.size())),
        }
    }

    /// A uniformly random feasible solution (before repair it is uniform over
    /// the raw domain).
    fn random_solution(&self, rng: &mut dyn RngCore) -> Solution {
        let n = self.size();
        let mut x = match self.domain() {
            Domain::Permutation => {
                let mut v: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    v.swap(i, j);
                }
                Solution::from_raw(Domain::Permutation, v)
            }
            d => {
                let a = d.arity(n);
                Solution::from_raw(d, (0..n).map(|_| rng.random_range(0..a)).collect())
            }
        };
        self.repair(&mut x);
        x
    }
}

/// Which benchmark family an instance belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Tsp,
    Kp,
    Cvrp,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Tsp => "tsp",
            ProblemKind::Kp => "kp",
            ProblemKind::Cvrp => "cvrp",
        })
    }
}

/// A generated benchmark instance of any supported family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum Instance {
    Tsp(TspInstance),
    Kp(KpInstance),
    Cvrp(CvrpInstance),
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema_version: u32,
    #[serde(flatten)]
    instance: Instance,
}

/// Identity of an instance: enough to tell whether two runs used the same one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceId {
    pub problem: ProblemKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl Instance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Tsp(_) => ProblemKind::Tsp,
            Instance::Kp(_) => ProblemKind::Kp,
            Instance::Cvrp(_) => ProblemKind::Cvrp,
        }
    }

    pub fn id(&self) -> InstanceId {
        let (n, m, seed) = match self {
            Instance::Tsp(t) => (t.n, t.m, t.seed),
            Instance::Kp(k) => (k.n, k.m, k.seed),
            Instance::Cvrp(c) => (c.n, 2, c.seed),
        };
        InstanceId {
            problem: self.kind(),
            n,
            m,
            seed,
        }
    }

    pub fn as_problem(&self) -> &dyn Problem {
        match self {
            Instance::Tsp(t) => t,
            Instance::Kp(k) => k,
            Instance::Cvrp(c) => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Instance::Tsp(t) => t.validate(),
            Instance::Kp(k) => k.validate(),
            Instance::Cvrp(c) => c.validate(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = InstanceFile {
            schema_version: SCHEMA_VERSION,
            instance: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported schema_version {}",
                file.schema_version
            )));
        }
        file.instance.validate()?;
        Ok(file.instance)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// The portable instance stream described in the module docs.
pub(crate) struct InstanceRng(Xoshiro256StarStar);

impl InstanceRng {
    pub(crate) fn new(seed: u64) -> Self {
        Self(Xoshiro256StarStar::seed_from_u64(seed))
    }

    /// Uniform real strictly inside (0, 1).
    pub(crate) fn unit(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `{1..=k}`.
    pub(crate) fn one_to(&mut self, k: u32) -> u32 {
        1 + (self.unit() * f64::from(k)).floor() as u32
    }

    pub(crate) fn point(&mut self) -> [f64; 2] {
        let x = self.unit();
        let y = self.unit();
        [x, y]
    }
}

pub(crate) fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
