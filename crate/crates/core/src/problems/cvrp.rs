use serde::{Deserialize, Serialize};

use super::{euclid, Domain, Evaluation, InstanceRng, Problem, Sense, Solution};
use crate::{Error, Result};

/// Single-depot CVRP with two objectives: total distance and makespan
/// (longest route).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvrpInstance {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub capacity: u32,
    /// Node 0 is the depot, nodes `1..=n` are customers.
    pub coords: Vec<[f64; 2]>,
    /// `demands[j - 1]` belongs to customer node `j`.
    pub demands: Vec<u32>,
}

pub const DEPOT: [f64; 2] = [0.5, 0.5];

fn standard_capacity(n: usize) -> Option<u32> {
    match n {
        20 => Some(30),
        50 => Some(40),
        100 => Some(50),
        _ => None,
    }
}

/// Depot at the center, customers uniform in the unit square, demands
/// uniform on `{1..9}`.
///
/// Draw order: customer coordinates (`x`, `y` per customer), then demands.
pub fn gen_cvrp(n: usize, seed: u64, capacity: Option<u32>) -> Result<CvrpInstance> {
    if n == 0 {
        return Err(Error::Parameter("cvrp needs at least one customer".into()));
    }
    let capacity = capacity.or_else(|| standard_capacity(n)).ok_or_else(|| {
        Error::Parameter(format!(
            "no standard capacity for n={n}; pass an explicit capacity"
        ))
    })?;
    if capacity < 9 {
        return Err(Error::Parameter(format!(
            "capacity {capacity} cannot hold the largest possible demand 9"
        )));
    }
    let mut rng = InstanceRng::new(seed);
    let mut coords = Vec::with_capacity(n + 1);
    coords.push(DEPOT);
    coords.extend((0..n).map(|_| rng.point()));
    let demands = (0..n).map(|_| rng.one_to(9)).collect();
    Ok(CvrpInstance {
        n,
        m: 2,
        seed,
        capacity,
        coords,
        demands,
    })
}

fn check_perm(inst: &CvrpInstance, perm: &Solution) -> Result<()> {
    if perm.domain() != Domain::Permutation || perm.len() != inst.n {
        return Err(Error::Domain(format!(
            "cvrp expects a permutation of {} customers",
            inst.n
        )));
    }
    perm.validate()
}

/// Greedy left-to-right split: a new route starts whenever the next customer
/// would overflow the vehicle. Routes hold customer node ids (`1..=n`).
pub fn split_routes(inst: &CvrpInstance, perm: &Solution) -> Result<Vec<Vec<usize>>> {
    check_perm(inst, perm)?;
    let mut routes: Vec<Vec<usize>> = Vec::new();
    let mut load = 0u32;
    for &c in perm.values() {
        let node = c + 1;
        let d = inst.demands[c];
        match routes.last_mut() {
            Some(route) if load + d <= inst.capacity => {
                route.push(node);
                load += d;
            }
            _ => {
                routes.push(vec![node]);
                load = d;
            }
        }
    }
    Ok(routes)
}

/// Closed route length including both depot legs.
pub fn route_length(inst: &CvrpInstance, route: &[usize]) -> f64 {
    let mut prev = 0;
    let mut len = 0.0;
    for &node in route {
        len += euclid(inst.coords[prev], inst.coords[node]);
        prev = node;
    }
    len + euclid(inst.coords[prev], inst.coords[0])
}

/// `(total distance, makespan)`; depot legs count towards both.
pub fn eval_cvrp(inst: &CvrpInstance, perm: &Solution) -> Result<Vec<f64>> {
    let routes = split_routes(inst, perm)?;
    let lengths: Vec<f64> = routes.iter().map(|r| route_length(inst, r)).collect();
    let total = lengths.iter().sum();
    let makespan = lengths.iter().copied().fold(0.0, f64::max);
    Ok(vec![total, makespan])
}

impl CvrpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.m != 2 || self.coords.len() != self.n + 1 || self.demands.len() != self.n {
            return Err(Error::Parameter("malformed cvrp instance".into()));
        }
        if self.coords[0] != DEPOT {
            return Err(Error::Parameter("depot must sit at (0.5, 0.5)".into()));
        }
        if let Some(d) = self.demands.iter().find(|&&d| d == 0 || d > self.capacity) {
            return Err(Error::Parameter(format!(
                "demand {d} does not fit capacity {}",
                self.capacity
            )));
        }
        Ok(())
    }
}

impl Problem for CvrpInstance {
    fn size(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        Domain::Permutation
    }

    fn num_objectives(&self) -> usize {
        2
    }

    fn sense(&self) -> Sense {
        Sense::Min
    }

    fn evaluate(&self, x: &Solution) -> Result<Evaluation> {
        Ok(Evaluation {
            objectives: eval_cvrp(self, x)?,
            feasible: true,
        })
    }

    /// Euclidean distance between customers.
    fn index_distance(&self) -> Option<Vec<Vec<f64>>> {
        let c = &self.coords[1..];
        Some(
            c.iter()
                .map(|&a| c.iter().map(|&b| euclid(a, b)).collect())
                .collect(),
        )
    }

    fn uses_knn_refinement(&self) -> bool {
        true
    }
}
