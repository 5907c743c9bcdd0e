use super::{Domain, Evaluation, Problem, Sense, Solution};
use crate::{Error, Result};

/// Single-objective additive test problem: reward `sum_i mu[i][x_i]` over a
/// categorical domain. The optimum is the row-wise argmax, which makes it a
/// ground truth for convergence and regret checks.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableProblem {
    means: Vec<Vec<f64>>,
}

impl SeparableProblem {
    pub fn new(means: Vec<Vec<f64>>) -> Result<Self> {
        let arity = means.first().map_or(0, Vec::len);
        if arity < 2 || means.iter().any(|r| r.len() != arity) {
            return Err(Error::Parameter(
                "separable problem needs a rectangular table with >= 2 actions".into(),
            ));
        }
        Ok(Self { means })
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }
}

impl Problem for SeparableProblem {
    fn size(&self) -> usize {
        self.means.len()
    }

    fn domain(&self) -> Domain {
        Domain::Categorical {
            arity: self.means[0].len(),
        }
    }

    fn num_objectives(&self) -> usize {
        1
    }

    fn sense(&self) -> Sense {
        Sense::Max
    }

    fn evaluate(&self, x: &Solution) -> Result<Evaluation> {
        if x.domain() != self.domain() || x.len() != self.size() {
            return Err(Error::Domain("separable problem solution shape".into()));
        }
        let total = x
            .values()
            .iter()
            .zip(&self.means)
            .map(|(&a, row)| row[a])
            .sum();
        Ok(Evaluation {
            objectives: vec![total],
            feasible: true,
        })
    }
}
