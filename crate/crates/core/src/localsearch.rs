//! Greedy refinement of one subproblem through unit perturbations.

use rand::Rng;

use crate::problems::{Domain, Problem, Solution};
use crate::scalarization::Scalarizer;
use crate::{Error, Result};

/// A solution together with its objective vector and scalarized reward.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub solution: Solution,
    pub objectives: Vec<f64>,
    pub feasible: bool,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// Exchange the values at two positions.
    AdjacentSwap(usize, usize),
    /// Reverse the values held by these positions (increasing order).
    Reversal(Vec<usize>),
    BitFlip(usize),
    Reassign {
        index: usize,
        value: usize,
    },
}

impl Move {
    pub fn apply(&self, x: &mut Solution) {
        let v = x.values_mut();
        match self {
            Move::AdjacentSwap(a, b) => v.swap(*a, *b),
            Move::Reversal(positions) => {
                let k = positions.len();
                for j in 0..k / 2 {
                    v.swap(positions[j], positions[k - 1 - j]);
                }
            }
            Move::BitFlip(i) => v[*i] ^= 1,
            Move::Reassign { index, value } => v[*index] = *value,
        }
    }

    /// Positions whose value may change.
    pub fn touched(&self) -> Vec<usize> {
        match self {
            Move::AdjacentSwap(a, b) => vec![*a, *b],
            Move::Reversal(positions) => positions.clone(),
            Move::BitFlip(i) | Move::Reassign { index: i, .. } => vec![*i],
        }
    }
}

/// Random move restricted to the positions in `subset` (sorted).
///
/// Permutations swap two neighbouring members of `subset`, or with
/// probability `two_opt_prob` reverse the values along a run of members.
pub fn unit_perturbation<R: Rng + ?Sized>(
    x: &Solution,
    subset: &[usize],
    two_opt_prob: f64,
    rng: &mut R,
) -> Result<Move> {
    if let Some(&i) = subset.iter().find(|&&i| i >= x.len()) {
        return Err(Error::Parameter(format!(
            "position {i} outside 0..{}",
            x.len()
        )));
    }
    match x.domain() {
        Domain::Permutation => {
            if subset.len() < 2 {
                return Err(Error::Parameter(
                    "permutation moves need at least two positions".into(),
                ));
            }
            if rng.random_bool(two_opt_prob.clamp(0.0, 1.0)) {
                let lo = rng.random_range(0..subset.len() - 1);
                let hi = rng.random_range(lo + 1..subset.len());
                Ok(Move::Reversal(subset[lo..=hi].to_vec()))
            } else {
                let j = rng.random_range(0..subset.len() - 1);
                Ok(Move::AdjacentSwap(subset[j], subset[j + 1]))
            }
        }
        Domain::Binary => {
            if subset.is_empty() {
                return Err(Error::Parameter("empty subproblem".into()));
            }
            Ok(Move::BitFlip(subset[rng.random_range(0..subset.len())]))
        }
        Domain::Categorical { arity } => {
            if subset.is_empty() || arity < 2 {
                return Err(Error::Parameter("nothing to reassign".into()));
            }
            let index = subset[rng.random_range(0..subset.len())];
            let current = x.values()[index];
            let value = rng.random_range(0..arity - 1);
            Ok(Move::Reassign {
                index,
                value: if value >= current { value + 1 } else { value },
            })
        }
    }
}

/// Every move of the full-space neighbourhood: adjacent swaps plus segment
/// reversals for permutations, bit flips or reassignments otherwise.
pub fn neighbourhood(x: &Solution) -> Vec<Move> {
    let n = x.len();
    match x.domain() {
        Domain::Permutation => {
            let mut moves: Vec<Move> = (0..n.saturating_sub(1))
                .map(|i| Move::AdjacentSwap(i, i + 1))
                .collect();
            for i in 0..n {
                for j in i + 2..n {
                    moves.push(Move::Reversal((i..=j).collect()));
                }
            }
            moves
        }
        Domain::Binary => (0..n).map(Move::BitFlip).collect(),
        Domain::Categorical { arity } => (0..n)
            .flat_map(|index| {
                let current = x.values()[index];
                (0..arity)
                    .filter(move |&value| value != current)
                    .map(move |value| Move::Reassign { index, value })
            })
            .collect(),
    }
}

/// Evaluates candidates for one weight vector.
pub struct LocalSearch<'a> {
    pub problem: &'a dyn Problem,
    pub scalarizer: &'a Scalarizer,
    /// Probability of a segment reversal instead of a swap.
    pub two_opt_prob: f64,
}

impl LocalSearch<'_> {
    /// One objective evaluation.
    pub fn score(&self, solution: Solution) -> Result<Scored> {
        let eval = self.problem.evaluate(&solution)?;
        let reward = self.scalarizer.reward(&eval.objectives);
        Ok(Scored {
            solution,
            objectives: eval.objectives,
            feasible: eval.feasible,
            reward,
        })
    }

    /// `rounds` propose/evaluate/accept steps on the positions in `subset`.
    /// A candidate replaces `current` only if it is feasible and its reward
    /// is strictly larger. Every candidate is passed to `observe`. Returns
    /// the number of accepted moves.
    pub fn refine<R, F>(
        &self,
        current: &mut Scored,
        subset: &[usize],
        rounds: usize,
        rng: &mut R,
        mut observe: F,
    ) -> Result<usize>
    where
        R: Rng + ?Sized,
        F: FnMut(&Scored) -> Result<()>,
    {
        let mut accepted = 0;
        for _ in 0..rounds {
            let mv = unit_perturbation(&current.solution, subset, self.two_opt_prob, rng)?;
            let mut candidate = current.solution.clone();
            mv.apply(&mut candidate);
            self.problem.repair_within(&mut candidate, subset);
            let scored = self.score(candidate)?;
            observe(&scored)?;
            if scored.feasible && scored.reward > current.reward {
                *current = scored;
                accepted += 1;
            }
        }
        Ok(accepted)
    }
}
