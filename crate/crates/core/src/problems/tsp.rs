use serde::{Deserialize, Serialize};

use super::{euclid, Domain, Evaluation, InstanceRng, Problem, Sense, Solution};
use crate::{Error, Result};

/// Multi-objective symmetric Euclidean TSP: `m` independent coordinate sets
/// over the same `n` cities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// `coords[i][c]` is city `c` under objective `i`.
    pub coords: Vec<Vec<[f64; 2]>>,
}

/// Draws `m` coordinate sets of `n` points in the unit square.
///
/// Draw order: for each objective, for each city, `x` then `y`.
pub fn gen_tsp(n: usize, m: usize, seed: u64) -> Result<TspInstance> {
    if n < 3 {
        return Err(Error::Parameter(format!("tsp needs n >= 3, got {n}")));
    }
    if !(2..=3).contains(&m) {
        return Err(Error::Parameter(format!("tsp needs m in {{2,3}}, got {m}")));
    }
    let mut rng = InstanceRng::new(seed);
    let coords = (0..m)
        .map(|_| (0..n).map(|_| rng.point()).collect())
        .collect();
    Ok(TspInstance { n, m, seed, coords })
}

/// Cyclic tour length under every coordinate set.
pub fn eval_tsp(inst: &TspInstance, x: &Solution) -> Result<Vec<f64>> {
    if x.domain() != Domain::Permutation || x.len() != inst.n {
        return Err(Error::Domain(format!(
            "tsp expects a permutation of {} cities",
            inst.n
        )));
    }
    x.validate()?;
    let tour = x.values();
    Ok(inst
        .coords
        .iter()
        .map(|pts| {
            (0..tour.len())
                .map(|j| euclid(pts[tour[j]], pts[tour[(j + 1) % tour.len()]]))
                .sum()
        })
        .collect())
}

impl TspInstance {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.coords.len() != self.m || self.m < 2 {
            return Err(Error::Parameter("malformed tsp instance".into()));
        }
        for set in &self.coords {
            if set.len() != self.n {
                return Err(Error::Parameter(format!(
                    "coordinate set has {} points, expected {}",
                    set.len(),
                    self.n
                )));
            }
            if set.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Parameter("coordinate outside [0,1]".into()));
            }
        }
        Ok(())
    }
}

impl Problem for TspInstance {
    fn size(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        Domain::Permutation
    }

    fn num_objectives(&self) -> usize {
        self.m
    }

    fn sense(&self) -> Sense {
        Sense::Min
    }

    fn evaluate(&self, x: &Solution) -> Result<Evaluation> {
        Ok(Evaluation {
            objectives: eval_tsp(self, x)?,
            feasible: true,
        })
    }

    /// City distance averaged over the coordinate sets.
    fn index_distance(&self) -> Option<Vec<Vec<f64>>> {
        let n = self.n;
        let mut d = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                d[a][b] = self
                    .coords
                    .iter()
                    .map(|pts| euclid(pts[a], pts[b]))
                    .sum::<f64>()
                    / self.m as f64;
            }
        }
        Some(d)
    }

    fn uses_knn_refinement(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(m: usize) -> TspInstance {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        TspInstance {
            n: 4,
            m,
            seed: 0,
            coords: vec![pts; m],
        }
    }

    #[test]
    fn generator_is_deterministic_and_in_range() {
        let a = gen_tsp(20, 2, 42).unwrap();
        let b = gen_tsp(20, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coords.len(), 2);
        assert!(a.coords.iter().all(|s| s.len() == 20));
        assert!(a
            .coords
            .iter()
            .flatten()
            .flatten()
            .all(|c| (0.0..=1.0).contains(c)));
        assert_ne!(a.coords[0], a.coords[1]);
    }

    #[test]
    fn tri_objective_hundred_city_instance() {
        let t = gen_tsp(100, 3, 7).unwrap();
        t.validate().unwrap();
        assert_eq!(t.coords.len(), 3);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(matches!(gen_tsp(2, 2, 0), Err(Error::Parameter(_))));
        assert!(matches!(gen_tsp(10, 4, 0), Err(Error::Parameter(_))));
        assert!(matches!(gen_tsp(10, 1, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn unit_square_perimeter() {
        let inst = square(2);
        let f = eval_tsp(&inst, &Solution::permutation(vec![0, 1, 2, 3]).unwrap()).unwrap();
        assert_eq!(f, vec![4.0, 4.0]);
    }

    #[test]
    fn three_cities_match_edge_by_edge_sum() {
        let inst = gen_tsp(3, 2, 11).unwrap();
        let x = Solution::permutation(vec![2, 0, 1]).unwrap();
        let f = eval_tsp(&inst, &x).unwrap();
        for (i, pts) in inst.coords.iter().enumerate() {
            let d = |a: usize, b: usize| {
                ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt()
            };
            let expected = d(2, 0) + d(0, 1) + d(1, 2);
            assert!((f[i] - expected).abs() < 1e-12);
            assert!(f[i] > 0.0);
        }
    }

    #[test]
    fn non_permutation_is_domain_error() {
        let inst = square(2);
        let bad = Solution::binary(&[true, false, true, true]);
        assert!(matches!(eval_tsp(&inst, &bad), Err(Error::Domain(_))));
        let short = Solution::permutation(vec![0, 1, 2]).unwrap();
        assert!(matches!(eval_tsp(&inst, &short), Err(Error::Domain(_))));
    }

    #[test]
    fn index_distance_of_identical_sets_is_plain_euclidean() {
        let inst = square(3);
        let d = inst.index_distance().unwrap();
        assert_eq!(d[0][1], 1.0);
        assert!((d[0][2] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d[3][3], 0.0);
    }

    #[test]
    fn index_distance_three_cities_by_hand() {
        let inst = TspInstance {
            n: 3,
            m: 2,
            seed: 0,
            coords: vec![
                vec![[0.0, 0.0], [0.3, 0.4], [0.0, 1.0]],
                vec![[0.0, 0.0], [0.6, 0.8], [1.0, 0.0]],
            ],
        };
        let d = inst.index_distance().unwrap();
        // (0.5 + 1.0)/2, (1.0 + 1.0)/2, (sqrt(0.45) + sqrt(0.8))/2
        assert!((d[0][1] - 0.75).abs() < 1e-15);
        assert!((d[0][2] - 1.0).abs() < 1e-15);
        let d12 = (0.45f64.sqrt() + 0.8f64.sqrt()) / 2.0;
        assert!((d[1][2] - d12).abs() < 1e-15);
        assert_eq!(d[2][1], d[1][2]);
    }
}
