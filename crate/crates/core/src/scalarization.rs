//! Weight vectors on the simplex and the reduction of objective vectors to
//! a scalar reward (larger is always better).

use serde::{Deserialize, Serialize};

use crate::error::check_dims;
use crate::problems::Sense;
use crate::{Error, Result};

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Parameter(format!(
                "weights must be nonnegative: {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Smallest lattice resolution `H` whose `C(H + 2, 2)` three-objective
/// lattice has at least `count` points.
pub fn lattice_resolution(count: usize) -> usize {
    let mut h = 1;
    while (h + 2) * (h + 1) / 2 < count {
        h += 1;
    }
    h
}

/// Evenly spread weights.
///
/// Two objectives: `count` points `(i/(count-1), 1 - i/(count-1))`. Three
/// objectives: the full simplex lattice at resolution
/// [`lattice_resolution`]`(count)`, which may hold more than `count` points
/// and always contains the vertices.
pub fn gen_weights(m: usize, count: usize) -> Result<Vec<WeightVector>> {
    if count < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 weights, got {count}"
        )));
    }
    match m {
        2 => Ok((0..count)
            .map(|i| {
                let a = i as f64 / (count - 1) as f64;
                WeightVector(vec![a, 1.0 - a])
            })
            .collect()),
        3 => Ok(simplex_lattice(lattice_resolution(count))),
        _ => Err(Error::Unsupported(format!(
            "weight generation for m={m} objectives"
        ))),
    }
}

/// All `(a, b, c) / h` with `a + b + c = h`, ordered by decreasing `a`, then
/// decreasing `b`.
pub fn simplex_lattice(h: usize) -> Vec<WeightVector> {
    let hf = h as f64;
    let mut out = Vec::with_capacity((h + 1) * (h + 2) / 2);
    for a in (0..=h).rev() {
        for b in (0..=h - a).rev() {
            let c = h - a - b;
            out.push(WeightVector(vec![
                a as f64 / hf,
                b as f64 / hf,
                c as f64 / hf,
            ]));
        }
    }
    out
}

pub fn weighted_sum(f: &[f64], w: &WeightVector) -> Result<f64> {
    check_dims(w.dim(), f.len())?;
    Ok(f.iter().zip(&w.0).map(|(a, b)| a * b).sum())
}

/// Weighted infinity norm of the distance to the ideal point `z`.
pub fn tchebycheff(f: &[f64], w: &WeightVector, z: &[f64]) -> Result<f64> {
    check_dims(w.dim(), f.len())?;
    check_dims(w.dim(), z.len())?;
    Ok(f.iter()
        .zip(z)
        .zip(&w.0)
        .map(|((fi, zi), wi)| wi * (fi - zi).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Ws,
    Tch,
}

/// Scalar reward of `f`; larger is better regardless of `sense`.
///
/// Weighted sums are negated for minimization problems. Tchebycheff
/// distances to the ideal point are always negated since a smaller distance
/// is a better solution in either sense.
pub fn to_reward(
    f: &[f64],
    w: &WeightVector,
    scheme: Scheme,
    sense: Sense,
    z: Option<&[f64]>,
) -> Result<f64> {
    match scheme {
        Scheme::Ws => {
            let s = weighted_sum(f, w)?;
            Ok(match sense {
                Sense::Max => s,
                Sense::Min => -s,
            })
        }
        Scheme::Tch => {
            let z = z.ok_or_else(|| {
                Error::Parameter("tchebycheff scalarization needs an ideal point".into())
            })?;
            Ok(-tchebycheff(f, w, z)?)
        }
    }
}

/// A fully specified scalarization, checked once and then applied to many
/// objective vectors.
#[derive(Clone, Debug)]
pub struct Scalarizer {
    weight: WeightVector,
    scheme: Scheme,
    sense: Sense,
    ideal: Option<Vec<f64>>,
}

impl Scalarizer {
    pub fn new(
        weight: WeightVector,
        scheme: Scheme,
        sense: Sense,
        ideal: Option<Vec<f64>>,
    ) -> Result<Self> {
        // Validates dimensions and the ideal point requirement up front.
        let probe = vec![0.0; weight.dim()];
        to_reward(&probe, &weight, scheme, sense, ideal.as_deref())?;
        Ok(Self {
            weight,
            scheme,
            sense,
            ideal,
        })
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    pub fn reward(&self, f: &[f64]) -> f64 {
        to_reward(
            f,
            &self.weight,
            self.scheme,
            self.sense,
            self.ideal.as_deref(),
        )
        .expect("dimensions checked at construction")
    }
}
