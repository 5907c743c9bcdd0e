//! Overlapping subproblems over the variable indices `0..n`.
//!
//! Sliding windows of width `s` advance by `s - o_t` positions, so
//! consecutive windows share `o_t` indices; the overlap width shrinks over
//! time according to an [`OverlapSchedule`]. k-nearest-neighbour
//! subproblems group indices that are close under a problem-specific
//! distance.

use serde::{Deserialize, Serialize};

use crate::problems::Instance;
use crate::{Error, Result};

/// Absorbs rounding in `o0 * t^-alpha` when the exact value is an integer.
const FLOOR_SLACK: f64 = 1e-9;

/// `floor(o0 * t^-alpha)`.
pub fn overlap_schedule(o0: usize, alpha: f64, t: usize) -> usize {
    let t = t.max(1) as f64;
    (o0 as f64 * t.powf(-alpha) + FLOOR_SLACK).floor() as usize
}

/// `floor(o0 * (1 - beta)^t)`.
pub fn exponential_overlap(o0: usize, beta: f64, t: usize) -> usize {
    (o0 as f64 * (1.0 - beta).powf(t as f64) + FLOOR_SLACK).floor() as usize
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `o_t = floor(o0 * t^-alpha)`
    #[default]
    Polynomial,
    /// `o_t = floor(o0 * (1 - beta)^t)`
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSchedule {
    pub kind: ScheduleKind,
    pub initial: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl OverlapSchedule {
    pub fn at(&self, t: usize) -> usize {
        match self.kind {
            ScheduleKind::Polynomial => overlap_schedule(self.initial, self.alpha, t),
            ScheduleKind::Exponential => exponential_overlap(self.initial, self.beta, t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subproblem {
    pub id: usize,
    /// Strictly increasing variable indices.
    pub indices: Vec<usize>,
}

/// A covering family of subproblems with its overlap bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    n: usize,
    subproblems: Vec<Subproblem>,
    multiplicity: Vec<usize>,
    overlap: Vec<usize>,
}

impl Decomposition {
    /// Builds the bookkeeping for arbitrary subproblems; they must cover `0..n`.
    pub fn from_subproblems(n: usize, subproblems: Vec<Subproblem>) -> Result<Self> {
        let mut multiplicity = vec![0; n];
        for sp in &subproblems {
            if sp.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parameter(format!(
                    "subproblem {} indices not strictly increasing",
                    sp.id
                )));
            }
            for &i in &sp.indices {
                if i >= n {
                    return Err(Error::Parameter(format!("index {i} outside 0..{n}")));
                }
                multiplicity[i] += 1;
            }
        }
        if let Some(i) = multiplicity.iter().position(|&k| k == 0) {
            return Err(Error::Parameter(format!("index {i} is not covered")));
        }
        let overlap = (0..n).filter(|&i| multiplicity[i] >= 2).collect();
        Ok(Self {
            n,
            subproblems,
            multiplicity,
            overlap,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn subproblems(&self) -> &[Subproblem] {
        &self.subproblems
    }

    /// `k_i`: number of subproblems containing index `i`.
    pub fn multiplicity(&self, i: usize) -> usize {
        self.multiplicity[i]
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicity
    }

    /// Indices shared by at least two subproblems.
    pub fn overlap_set(&self) -> &[usize] {
        &self.overlap
    }
}

/// Windows `[k(s - o), min(n, k(s - o) + s))` for `k = 0, 1, ...` until the
/// last index is covered; the final window may be shorter.
pub fn sliding_window(n: usize, s: usize, o: usize) -> Result<Decomposition> {
    if s == 0 || s > n {
        return Err(Error::Parameter(format!(
            "window size {s} must lie in 1..={n}"
        )));
    }
    if o >= s {
        return Err(Error::Parameter(format!(
            "overlap {o} must be smaller than window size {s}"
        )));
    }
    let step = s - o;
    let mut subproblems = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + s).min(n);
        subproblems.push(Subproblem {
            id: subproblems.len(),
            indices: (start..end).collect(),
        });
        if end == n {
            break;
        }
        start += step;
    }
    Decomposition::from_subproblems(n, subproblems)
}

/// The `s` indices closest to `center` under `d` (the center itself first,
/// remaining ties by lower index), returned in increasing order.
pub fn knn_subproblem(d: &[Vec<f64>], center: usize, s: usize) -> Result<Subproblem> {
    let n = d.len();
    if s > n || s == 0 {
        return Err(Error::Parameter(format!(
            "neighbourhood size {s} must lie in 1..={n}"
        )));
    }
    if center >= n {
        return Err(Error::Parameter(format!("center {center} outside 0..{n}")));
    }
    let row = &d[center];
    let mut others: Vec<usize> = (0..n).filter(|&j| j != center).collect();
    others.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    let mut indices: Vec<usize> = std::iter::once(center)
        .chain(others.into_iter().take(s - 1))
        .collect();
    indices.sort_unstable();
    Ok(Subproblem {
        id: center,
        indices,
    })
}

/// Locality matrix of a benchmark instance.
pub fn index_distance(inst: &Instance) -> Vec<Vec<f64>> {
    inst.as_problem()
        .index_distance()
        .expect("every benchmark family defines an index distance")
}

/// Overlap counting bound. Each overlap index is counted once per
/// subproblem beyond its first, `sum_{i in O} (k_i - 1)`, and compared
/// with `(rho - 1) * n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverlapBound {
    /// Maximum multiplicity.
    pub rho: usize,
    /// Raw incidence `sum_k |S_k ∩ O|`.
    pub overlap_incidence: usize,
    /// Excess incidence `sum_{i in O} (k_i - 1)`.
    pub overlap_excess: usize,
    pub bound: usize,
    pub holds: bool,
}

pub fn multiplicity_check(decomp: &Decomposition) -> OverlapBound {
    let rho = decomp.multiplicity.iter().copied().max().unwrap_or(0);
    let overlap_incidence: usize = decomp.overlap.iter().map(|&i| decomp.multiplicity[i]).sum();
    let overlap_excess = overlap_incidence - decomp.overlap.len();
    let bound = rho.saturating_sub(1) * decomp.n;
    OverlapBound {
        rho,
        overlap_incidence,
        overlap_excess,
        bound,
        holds: overlap_excess <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_based(d: &Decomposition) -> Vec<Vec<usize>> {
        d.subproblems()
            .iter()
            .map(|s| s.indices.iter().map(|i| i + 1).collect())
            .collect()
    }

    #[test]
    fn schedule_floor_arithmetic() {
        assert_eq!(overlap_schedule(6, 0.5, 1), 6);
        assert_eq!(overlap_schedule(6, 0.5, 4), 3);
        assert_eq!(overlap_schedule(6, 0.5, 9), 2);
        assert_eq!(overlap_schedule(6, 0.5, 36), 1);
        assert_eq!(overlap_schedule(6, 0.5, 37), 0);
        for t in [1, 10, 1000] {
            assert_eq!(overlap_schedule(11, 0.0, t), 11);
        }
        assert_eq!(exponential_overlap(6, 0.1, 0), 6);
        assert_eq!(exponential_overlap(6, 0.1, 1), 5);
        assert_eq!(exponential_overlap(6, 0.1, 17), 1); // 6 * 0.9^17 = 1.00
        assert_eq!(exponential_overlap(6, 0.1, 18), 0);
    }

    #[test]
    fn window_examples() {
        let d = sliding_window(10, 4, 2).unwrap();
        assert_eq!(
            one_based(&d),
            vec![
                vec![1, 2, 3, 4],
                vec![3, 4, 5, 6],
                vec![5, 6, 7, 8],
                vec![7, 8, 9, 10]
            ]
        );
        assert_eq!(d.multiplicities().iter().max(), Some(&2));

        let mono = sliding_window(10, 10, 0).unwrap();
        assert_eq!(one_based(&mono), vec![(1..=10).collect::<Vec<_>>()]);

        let disjoint = sliding_window(10, 4, 0).unwrap();
        assert_eq!(
            one_based(&disjoint),
            vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8], vec![9, 10]]
        );
        assert!(disjoint.overlap_set().is_empty());

        assert!(matches!(sliding_window(10, 4, 4), Err(Error::Parameter(_))));
        assert!(sliding_window(3, 4, 0).is_err());
    }

    #[test]
    fn counting_bound_examples() {
        let b = multiplicity_check(&sliding_window(10, 4, 0).unwrap());
        assert_eq!((b.rho, b.overlap_excess, b.bound, b.holds), (1, 0, 0, true));

        // overlap set {3,4,5,6,7,8} (1-based), each in exactly two windows
        let b = multiplicity_check(&sliding_window(10, 4, 2).unwrap());
        assert_eq!(
            (b.rho, b.overlap_incidence, b.overlap_excess, b.bound),
            (2, 12, 6, 10)
        );
        assert!(b.holds);

        let b = multiplicity_check(&sliding_window(10, 10, 0).unwrap());
        assert_eq!(b.rho, 1);
        assert!(b.holds);
    }

    #[test]
    fn knn_on_line_metric() {
        let d: Vec<Vec<f64>> = (0..10)
            .map(|i: i32| (0..10).map(|j: i32| f64::from((i - j).abs())).collect())
            .collect();
        // 1-based center 5, s = 3 -> {4, 5, 6}
        assert_eq!(knn_subproblem(&d, 4, 3).unwrap().indices, vec![3, 4, 5]);
        assert_eq!(
            knn_subproblem(&d, 4, 10).unwrap().indices,
            (0..10).collect::<Vec<_>>()
        );
        assert!(knn_subproblem(&d, 4, 11).is_err());
    }

    #[test]
    fn knn_matches_exhaustive_min_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 8;
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let d: Vec<Vec<f64>> = pts
                .iter()
                .map(|a| {
                    pts.iter()
                        .map(|b| (a[0] - b[0]).hypot(a[1] - b[1]))
                        .collect()
                })
                .collect();
            let c = rng.random_range(0..n);
            let got = knn_subproblem(&d, c, 4).unwrap();
            let got_sum: f64 = got.indices.iter().map(|&j| d[c][j]).sum();
            // every 4-subset containing c
            let mut best = f64::INFINITY;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() == 4 && mask & (1 << c) != 0 {
                    let s: f64 = (0..n)
                        .filter(|j| mask & (1 << j) != 0)
                        .map(|j| d[c][j])
                        .sum();
                    best = best.min(s);
                }
            }
            assert!((got_sum - best).abs() < 1e-12);
            assert!(got.indices.contains(&c));
        }
    }

    proptest! {
        #[test]
        fn windows_cover_and_respect_counting_bound(
            (n, s, o) in (1usize..60)
                .prop_flat_map(|n| (Just(n), 1..=n))
                .prop_flat_map(|(n, s)| (Just(n), Just(s), 0..s))
        ) {
            let d = sliding_window(n, s, o).unwrap();
            prop_assert!(d.multiplicities().iter().all(|&k| k >= 1));
            prop_assert!(d.subproblems().iter().all(|sp| sp.indices.len() <= s));
            prop_assert!(multiplicity_check(&d).holds);
            for pair in d.subproblems().windows(2) {
                if pair[0].indices.len() == s && pair[1].indices.len() == s {
                    let shared = pair[0].indices.iter().filter(|i| pair[1].indices.contains(i)).count();
                    prop_assert_eq!(shared, o);
                }
            }
        }

        #[test]
        fn schedule_is_non_increasing(o0 in 0usize..40, alpha in 0.0f64..2.0, t in 1usize..500) {
            prop_assert!(overlap_schedule(o0, alpha, t + 1) <= overlap_schedule(o0, alpha, t));
        }
    }
}
