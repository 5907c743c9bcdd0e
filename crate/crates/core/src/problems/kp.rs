use serde::{Deserialize, Serialize};

use super::{Domain, Evaluation, InstanceRng, Problem, Sense, Solution};
use crate::{Error, Result};

/// Multi-objective 0/1 knapsack with one weight and `m` values per item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpInstance {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub capacity: f64,
    pub weights: Vec<f64>,
    /// `values[i][j]` is the value of item `j` for objective `i`.
    pub values: Vec<Vec<f64>>,
}

/// Objective totals (to maximize) and capacity feasibility.
#[derive(Clone, Debug, PartialEq)]
pub struct KpEvaluation {
    pub objectives: Vec<f64>,
    pub feasible: bool,
}

fn standard_capacity(n: usize) -> Option<f64> {
    match n {
        50 => Some(12.5),
        100 | 200 => Some(25.0),
        _ => None,
    }
}

/// Draws item weights and values uniformly from (0, 1).
///
/// Sizes 50, 100 and 200 get capacities 12.5, 25 and 25; any other size
/// needs an explicit `capacity`. Draw order: all weights, then the values of
/// objective 0, objective 1, ...
pub fn gen_kp(n: usize, m: usize, seed: u64, capacity: Option<f64>) -> Result<KpInstance> {
    if n == 0 {
        return Err(Error::Parameter("knapsack needs at least one item".into()));
    }
    if !(2..=3).contains(&m) {
        return Err(Error::Parameter(format!("kp needs m in {{2,3}}, got {m}")));
    }
    let capacity = match capacity.or_else(|| standard_capacity(n)) {
        Some(c) if c > 0.0 && c.is_finite() => c,
        Some(c) => {
            return Err(Error::Parameter(format!(
                "capacity must be positive, got {c}"
            )))
        }
        None => {
            return Err(Error::Parameter(format!(
                "no standard capacity for n={n}; pass an explicit capacity"
            )))
        }
    };
    let mut rng = InstanceRng::new(seed);
    let weights = (0..n).map(|_| rng.unit()).collect();
    let values = (0..m)
        .map(|_| (0..n).map(|_| rng.unit()).collect())
        .collect();
    Ok(KpInstance {
        n,
        m,
        seed,
        capacity,
        weights,
        values,
    })
}

fn check_binary(inst: &KpInstance, x: &Solution) -> Result<()> {
    if x.domain() != Domain::Binary || x.len() != inst.n {
        return Err(Error::Domain(format!(
            "kp expects a binary vector of length {}",
            inst.n
        )));
    }
    Ok(())
}

/// Per-objective value totals; infeasibility is reported, not rejected.
pub fn eval_kp(inst: &KpInstance, x: &Solution) -> Result<KpEvaluation> {
    check_binary(inst, x)?;
    let chosen: Vec<usize> = (0..inst.n).filter(|&j| x.bit(j)).collect();
    let objectives = inst
        .values
        .iter()
        .map(|v| chosen.iter().map(|&j| v[j]).sum())
        .collect();
    let load: f64 = chosen.iter().map(|&j| inst.weights[j]).sum();
    Ok(KpEvaluation {
        objectives,
        feasible: load <= inst.capacity,
    })
}

/// Removes selected items in ascending order of total value per weight
/// (ties: lower index first) until the load fits the capacity.
pub fn repair_kp(inst: &KpInstance, x: &Solution) -> Result<Solution> {
    check_binary(inst, x)?;
    Ok(drop_until_fits(inst, x, (0..inst.n).collect()))
}

/// Like [`repair_kp`] but only removes items listed in `allowed`; the
/// result may stay infeasible when those items do not free enough room.
pub fn repair_kp_within(inst: &KpInstance, x: &Solution, allowed: &[usize]) -> Result<Solution> {
    check_binary(inst, x)?;
    if let Some(&j) = allowed.iter().find(|&&j| j >= inst.n) {
        return Err(Error::Parameter(format!("item {j} outside 0..{}", inst.n)));
    }
    Ok(drop_until_fits(inst, x, allowed.to_vec()))
}

fn drop_until_fits(inst: &KpInstance, x: &Solution, mut order: Vec<usize>) -> Solution {
    let load = |x: &Solution| -> f64 {
        (0..inst.n)
            .filter(|&j| x.bit(j))
            .map(|j| inst.weights[j])
            .sum()
    };
    let mut out = x.clone();
    if load(&out) <= inst.capacity {
        return out;
    }
    order.retain(|&j| x.bit(j));
    let ratio = |j: usize| inst.values.iter().map(|v| v[j]).sum::<f64>() / inst.weights[j];
    order.sort_by(|&a, &b| ratio(a).total_cmp(&ratio(b)).then(a.cmp(&b)));
    for j in order {
        out.values_mut()[j] = 0;
        // Summed in index order, exactly as eval_kp does.
        if load(&out) <= inst.capacity {
            break;
        }
    }
    out
}

impl KpInstance {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0)
            || self.weights.len() != self.n
            || self.values.len() != self.m
            || self.values.iter().any(|v| v.len() != self.n)
        {
            return Err(Error::Parameter("malformed kp instance".into()));
        }
        if self
            .weights
            .iter()
            .chain(self.values.iter().flatten())
            .any(|&v| !(v > 0.0))
        {
            return Err(Error::Parameter(
                "weights and values must be positive".into(),
            ));
        }
        Ok(())
    }

    fn load(&self, prefix: &[usize]) -> f64 {
        prefix
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(j, _)| self.weights[j])
            .sum()
    }
}

impl Problem for KpInstance {
    fn size(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        Domain::Binary
    }

    fn num_objectives(&self) -> usize {
        self.m
    }

    fn sense(&self) -> Sense {
        Sense::Max
    }

    fn evaluate(&self, x: &Solution) -> Result<Evaluation> {
        let e = eval_kp(self, x)?;
        Ok(Evaluation {
            objectives: e.objectives,
            feasible: e.feasible,
        })
    }

    fn repair(&self, x: &mut Solution) {
        if let Ok(fixed) = repair_kp(self, x) {
            *x = fixed;
        }
    }

    fn repair_within(&self, x: &mut Solution, allowed: &[usize]) {
        if let Ok(fixed) = repair_kp_within(self, x, allowed) {
            *x = fixed;
        }
    }

    /// Distance between mean-value-per-weight ratios.
    fn index_distance(&self) -> Option<Vec<Vec<f64>>> {
        let ratio: Vec<f64> = (0..self.n)
            .map(|j| {
                self.values.iter().map(|v| v[j]).sum::<f64>() / self.m as f64 / self.weights[j]
            })
            .collect();
        Some(
            ratio
                .iter()
                .map(|a| ratio.iter().map(|b| (a - b).abs()).collect())
                .collect(),
        )
    }

    /// Taking an item is admissible only while it still fits.
    fn admissible(&self, position: usize, prefix: &[usize], mask: &mut Vec<usize>) {
        mask.clear();
        mask.push(0);
        if self.load(prefix) + self.weights[position] <= self.capacity {
            mask.push(1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_items() -> KpInstance {
        KpInstance {
            n: 2,
            m: 2,
            seed: 0,
            capacity: 1.0,
            weights: vec![1.0, 1.0],
            values: vec![vec![3.0, 1.0], vec![1.0, 3.0]],
        }
    }

    #[test]
    fn standard_capacities() {
        assert_eq!(gen_kp(50, 2, 1, None).unwrap().capacity, 12.5);
        assert_eq!(gen_kp(100, 2, 1, None).unwrap().capacity, 25.0);
        assert_eq!(gen_kp(200, 2, 1, None).unwrap().capacity, 25.0);
    }

    #[test]
    fn custom_size_needs_explicit_capacity() {
        assert!(matches!(gen_kp(5, 2, 1, None), Err(Error::Parameter(_))));
        let k = gen_kp(5, 2, 1, Some(1.0)).unwrap();
        assert_eq!(k.capacity, 1.0);
        assert_eq!(k.weights.len(), 5);
        assert!(k.weights.iter().all(|&w| w > 0.0 && w < 1.0));
        assert!(k.values.iter().flatten().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn empty_knapsack_is_feasible_zero() {
        let k = gen_kp(50, 2, 3, None).unwrap();
        let e = eval_kp(&k, &Solution::binary(&[false; 50])).unwrap();
        assert_eq!(e.objectives, vec![0.0, 0.0]);
        assert!(e.feasible);
    }

    #[test]
    fn two_item_subsets_enumerated() {
        let k = two_items();
        let cases = [
            ([false, false], [0.0, 0.0], true),
            ([true, false], [3.0, 1.0], true),
            ([false, true], [1.0, 3.0], true),
            ([true, true], [4.0, 4.0], false),
        ];
        for (bits, f, feasible) in cases {
            let e = eval_kp(&k, &Solution::binary(&bits)).unwrap();
            assert_eq!(e.objectives, f.to_vec());
            assert_eq!(e.feasible, feasible);
        }
    }

    #[test]
    fn all_ones_over_capacity_is_flagged() {
        let k = gen_kp(50, 2, 3, None).unwrap();
        assert!(
            !eval_kp(&k, &Solution::binary(&[true; 50]))
                .unwrap()
                .feasible
        );
    }

    #[test]
    fn repair_is_identity_on_feasible() {
        let k = two_items();
        let x = Solution::binary(&[false, true]);
        assert_eq!(repair_kp(&k, &x).unwrap(), x);
    }

    #[test]
    fn repair_drops_lowest_ratio_item() {
        let k = KpInstance {
            n: 3,
            m: 2,
            seed: 0,
            capacity: 1.5,
            weights: vec![1.0, 0.5, 1.0],
            values: vec![vec![0.5, 0.4, 0.9], vec![0.1, 0.4, 0.9]],
        };
        // ratios: 0.6, 1.6, 1.8; greedy chain 111 -> 011 (load 1.5, feasible)
        let x = repair_kp(&k, &Solution::binary(&[true, true, true])).unwrap();
        assert_eq!(x, Solution::binary(&[false, true, true]));
        // The tied two-item case drops the lower index first.
        let y = repair_kp(&two_items(), &Solution::binary(&[true, true])).unwrap();
        assert_eq!(y, Solution::binary(&[false, true]));
        // Restricted to items 1 and 2: dropping 1 leaves load 2.0, so 2 goes too.
        let z = repair_kp_within(&k, &Solution::binary(&[true, true, true]), &[1, 2]).unwrap();
        assert_eq!(z, Solution::binary(&[true, false, false]));
        assert!(repair_kp_within(&k, &z, &[3]).is_err());
    }

    #[test]
    fn oversize_items_all_removed() {
        let k = KpInstance {
            n: 3,
            m: 2,
            seed: 0,
            capacity: 0.5,
            weights: vec![0.6, 0.9, 0.7],
            values: vec![vec![0.5; 3], vec![0.5; 3]],
        };
        let x = repair_kp(&k, &Solution::binary(&[true; 3])).unwrap();
        assert_eq!(x, Solution::binary(&[false; 3]));
    }

    #[test]
    fn equal_ratios_give_zero_distance() {
        let k = KpInstance {
            n: 3,
            m: 2,
            seed: 0,
            capacity: 1.0,
            weights: vec![0.2, 0.4, 0.1],
            values: vec![vec![0.2, 0.4, 0.1], vec![0.4, 0.8, 0.2]],
        };
        let d = k.index_distance().unwrap();
        assert!(d.iter().flatten().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn construction_mask_respects_capacity() {
        let k = two_items();
        let mut mask = Vec::new();
        k.admissible(0, &[], &mut mask);
        assert_eq!(mask, vec![0, 1]);
        k.admissible(1, &[1], &mut mask);
        assert_eq!(mask, vec![0]);
    }
}
