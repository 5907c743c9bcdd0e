//! Pareto dominance, the non-dominated archive, and exact hypervolume for
//! two and three objectives.

use serde::{Deserialize, Serialize};

use crate::error::check_dims;
use crate::problems::{Sense, Solution};
use crate::{Error, Result};

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64], sense: Sense) -> Result<bool> {
    check_dims(a.len(), b.len())?;
    Ok(dominates_unchecked(a, b, sense))
}

fn dominates_unchecked(a: &[f64], b: &[f64], sense: Sense) -> bool {
    let mut strict = false;
    for (&x, &y) in a.iter().zip(b) {
        let (better, worse) = match sense {
            Sense::Min => (x < y, x > y),
            Sense::Max => (x > y, x < y),
        };
        if worse {
            return false;
        }
        strict |= better;
    }
    strict
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub solution: Solution,
    pub objectives: Vec<f64>,
}

/// Mutually non-dominated (solution, objective vector) pairs. Objective
/// vectors are unique; the first solution reaching a vector is kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    sense: Sense,
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            entries: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Returns whether `f` entered the archive. Entries it dominates leave.
    pub fn insert(&mut self, solution: Solution, f: Vec<f64>) -> bool {
        if let Some(first) = self.entries.first() {
            assert_eq!(
                first.objectives.len(),
                f.len(),
                "objective dimension differs from archive"
            );
        }
        let rejected = self
            .entries
            .iter()
            .any(|e| e.objectives == f || dominates_unchecked(&e.objectives, &f, self.sense));
        if rejected {
            return false;
        }
        let sense = self.sense;
        self.entries
            .retain(|e| !dominates_unchecked(&f, &e.objectives, sense));
        self.entries.push(ArchiveEntry {
            solution,
            objectives: f,
        });
        true
    }

    /// Inserts every entry of `other`, in order.
    pub fn merge(&mut self, other: &ParetoArchive) {
        for e in &other.entries {
            self.insert(e.solution.clone(), e.objectives.clone());
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn front(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.objectives.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Number of non-dominated solutions held by the archive.
pub fn nds_count(archive: &ParetoArchive) -> usize {
    archive.len()
}

/// Exact dominated volume of a minimization front bounded by `reference`.
///
/// Points that are not strictly better than the reference in every
/// coordinate contribute nothing and are dropped.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    let m = reference.len();
    if m == 0 || m > 3 {
        return Err(Error::Unsupported(format!("hypervolume for m={m}")));
    }
    for p in front {
        check_dims(m, p.len())?;
    }
    let pts: Vec<&[f64]> = front
        .iter()
        .map(Vec::as_slice)
        .filter(|p| p.iter().zip(reference).all(|(a, r)| a < r))
        .collect();
    Ok(match m {
        1 => pts.iter().map(|p| reference[0] - p[0]).fold(0.0, f64::max),
        2 => hv2(
            pts.iter().map(|p| [p[0], p[1]]).collect(),
            [reference[0], reference[1]],
        ),
        _ => hv3(pts.iter().map(|p| [p[0], p[1], p[2]]).collect(), reference),
    })
}

/// Sweep over points sorted by the first coordinate.
fn hv2(mut pts: Vec<[f64; 2]>, reference: [f64; 2]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut floor = reference[1];
    for p in pts {
        if p[1] < floor {
            area += (reference[0] - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    area
}

/// Slices along the third coordinate: between consecutive distinct levels
/// the dominated cross-section is the 2-D volume of all points at or below
/// the lower level.
fn hv3(mut pts: Vec<[f64; 3]>, reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut i = 0;
    while i < pts.len() {
        let level = pts[i][2];
        while i < pts.len() && pts[i][2] == level {
            i += 1;
        }
        let top = pts.get(i).map_or(reference[2], |p| p[2]);
        let slice: Vec<[f64; 2]> = pts[..i].iter().map(|p| [p[0], p[1]]).collect();
        volume += hv2(slice, [reference[0], reference[1]]) * (top - level);
    }
    volume
}

/// Reference and ideal point pair used to normalize hypervolume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvFrame {
    pub reference: Vec<f64>,
    pub ideal: Vec<f64>,
    pub sense: Sense,
}

impl HvFrame {
    pub fn new(reference: Vec<f64>, ideal: Vec<f64>, sense: Sense) -> Result<Self> {
        check_dims(reference.len(), ideal.len())?;
        for (r, z) in reference.iter().zip(&ideal) {
            let ok = match sense {
                Sense::Min => r > z,
                Sense::Max => z > r,
            };
            if !ok {
                return Err(Error::Parameter(format!(
                    "degenerate frame: reference {reference:?} vs ideal {ideal:?}"
                )));
            }
        }
        Ok(Self {
            reference,
            ideal,
            sense,
        })
    }

    pub fn box_volume(&self) -> f64 {
        self.reference
            .iter()
            .zip(&self.ideal)
            .map(|(r, z)| (r - z).abs())
            .product()
    }

    /// Hypervolume of `front` inside this frame; maximization fronts are
    /// mirrored into minimization first.
    pub fn hypervolume(&self, front: &[Vec<f64>]) -> Result<f64> {
        match self.sense {
            Sense::Min => hypervolume(front, &self.reference),
            Sense::Max => {
                let flipped: Vec<Vec<f64>> = front
                    .iter()
                    .map(|p| p.iter().map(|v| -v).collect())
                    .collect();
                let r: Vec<f64> = self.reference.iter().map(|v| -v).collect();
                hypervolume(&flipped, &r)
            }
        }
    }
}

/// Hypervolume divided by the volume of the reference/ideal box.
pub fn hv_ratio(front: &[Vec<f64>], frame: &HvFrame) -> Result<f64> {
    let boxed = frame.box_volume();
    if !(boxed > 0.0) {
        return Err(Error::Parameter("degenerate hypervolume box".into()));
    }
    Ok(frame.hypervolume(front)? / boxed)
}

/// Standard benchmark frames: `(name, reference, ideal, sense)`.
const STANDARD_FRAMES: &[(&str, &[f64], &[f64], Sense)] = &[
    ("bitsp20", &[20.0, 20.0], &[0.0, 0.0], Sense::Min),
    ("bitsp50", &[35.0, 35.0], &[0.0, 0.0], Sense::Min),
    ("bitsp100", &[65.0, 65.0], &[0.0, 0.0], Sense::Min),
    (
        "tritsp20",
        &[20.0, 20.0, 20.0],
        &[0.0, 0.0, 0.0],
        Sense::Min,
    ),
    (
        "tritsp50",
        &[35.0, 35.0, 35.0],
        &[0.0, 0.0, 0.0],
        Sense::Min,
    ),
    (
        "tritsp100",
        &[65.0, 65.0, 65.0],
        &[0.0, 0.0, 0.0],
        Sense::Min,
    ),
    ("bikp50", &[5.0, 5.0], &[30.0, 30.0], Sense::Max),
    ("bikp100", &[20.0, 20.0], &[50.0, 50.0], Sense::Max),
    ("bikp200", &[30.0, 30.0], &[75.0, 75.0], Sense::Max),
    ("bicvrp20", &[30.0, 4.0], &[0.0, 0.0], Sense::Min),
    ("bicvrp50", &[45.0, 4.0], &[0.0, 0.0], Sense::Min),
    ("bicvrp100", &[80.0, 4.0], &[0.0, 0.0], Sense::Min),
];

pub fn standard_frame_names() -> Vec<&'static str> {
    STANDARD_FRAMES.iter().map(|f| f.0).collect()
}

/// Looks up a standard frame by name, e.g. `bitsp20` or `bikp100`.
pub fn standard_frame(name: &str) -> Option<HvFrame> {
    STANDARD_FRAMES
        .iter()
        .find(|f| f.0 == name.to_ascii_lowercase())
        .map(|&(_, r, z, sense)| HvFrame {
            reference: r.to_vec(),
            ideal: z.to_vec(),
            sense,
        })
}

/// Metrics written by front evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub hv: f64,
    pub hv_ratio: f64,
    pub nds: usize,
    #[serde(rename = "ref")]
    pub reference: Vec<f64>,
    pub ideal: Vec<f64>,
}

pub fn evaluate_front(front: &[Vec<f64>], frame: &HvFrame) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        hv: frame.hypervolume(front)?,
        hv_ratio: hv_ratio(front, frame)?,
        nds: front.len(),
        reference: frame.reference.clone(),
        ideal: frame.ideal.clone(),
    })
}

/// One objective vector per row, with an `f1,f2,...` header.
pub fn front_to_csv(front: &[Vec<f64>]) -> String {
    let m = front.first().map_or(0, Vec::len);
    let mut out = (1..=m)
        .map(|i| format!("f{i}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for p in front {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dummy() -> Solution {
        Solution::binary(&[])
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 2.0], Sense::Min).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[2.0, 1.0], Sense::Min).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0], Sense::Min).unwrap());
        assert!(dominates(&[2.0, 2.0], &[1.0, 2.0], Sense::Max).unwrap());
        assert!(dominates(&[1.0], &[1.0, 2.0], Sense::Min).is_err());
    }

    #[test]
    fn archive_examples() {
        let mut a = ParetoArchive::new(Sense::Min);
        assert_eq!(nds_count(&a), 0);
        assert!(a.insert(dummy(), vec![1.0, 2.0]));
        assert!(a.insert(dummy(), vec![2.0, 1.0]));
        assert!(!a.insert(dummy(), vec![2.0, 2.0]));
        assert!(!a.insert(dummy(), vec![1.0, 2.0]));
        assert_eq!(nds_count(&a), 2);

        let mut b = ParetoArchive::new(Sense::Min);
        for f in [[3.0, 3.0], [1.0, 2.0], [2.0, 1.0]] {
            b.insert(dummy(), f.to_vec());
        }
        assert_eq!(b.front(), vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
    }

    #[test]
    fn duplicate_vector_keeps_first_solution() {
        let mut a = ParetoArchive::new(Sense::Min);
        let first = Solution::binary(&[true]);
        a.insert(first.clone(), vec![1.0, 1.0]);
        assert!(!a.insert(Solution::binary(&[false]), vec![1.0, 1.0]));
        assert_eq!(a.entries()[0].solution, first);
    }

    #[test]
    fn hypervolume_examples() {
        let front = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
        assert_eq!(hypervolume(&front, &[4.0, 4.0]).unwrap(), 6.0);
        assert_eq!(hypervolume(&[vec![0.0, 0.0]], &[2.0, 2.0]).unwrap(), 4.0);
        assert_eq!(hypervolume(&[], &[2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(hypervolume(&[vec![3.0, 1.0]], &[2.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            hypervolume(&[vec![0.0; 4]], &[1.0; 4]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn hypervolume_3d_boxes() {
        let front = vec![vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 2.0]];
        // box A: [1,3]^3 = 8; box B: [0,3]x[0,3]x[2,3] = 9; overlap [1,3]^2x[2,3] = 4
        assert_eq!(hypervolume(&front, &[3.0, 3.0, 3.0]).unwrap(), 13.0);
    }

    #[test]
    fn ratio_examples() {
        let frame = HvFrame::new(vec![20.0, 20.0], vec![0.0, 0.0], Sense::Min).unwrap();
        assert_eq!(hv_ratio(&[vec![0.0, 0.0]], &frame).unwrap(), 1.0);
        let frame = HvFrame::new(vec![4.0, 4.0], vec![0.0, 0.0], Sense::Min).unwrap();
        let front = vec![vec![1.0, 3.0], vec![2.0, 2.0], vec![3.0, 1.0]];
        assert_eq!(hv_ratio(&front, &frame).unwrap(), 0.375);
        assert!(HvFrame::new(vec![1.0, 0.0], vec![0.0, 0.0], Sense::Min).is_err());
    }

    #[test]
    fn standard_frames() {
        let f = standard_frame("bitsp20").unwrap();
        assert_eq!(
            (f.reference.as_slice(), f.ideal.as_slice()),
            (&[20.0, 20.0][..], &[0.0, 0.0][..])
        );
        let f = standard_frame("bikp100").unwrap();
        assert_eq!(f.reference, vec![20.0, 20.0]);
        assert_eq!(f.ideal, vec![50.0, 50.0]);
        assert_eq!(f.sense, Sense::Max);
        assert_eq!(
            standard_frame("bicvrp20").unwrap().reference,
            vec![30.0, 4.0]
        );
        assert_eq!(standard_frame("tritsp50").unwrap().reference, vec![35.0; 3]);
        assert!(standard_frame("bitsp30").is_none());
        for name in standard_frame_names() {
            let f = standard_frame(name).unwrap();
            HvFrame::new(f.reference, f.ideal, f.sense).unwrap();
        }
    }

    #[test]
    fn maximization_frame_mirrors() {
        let frame = standard_frame("bikp100").unwrap();
        // (50,50) is the ideal: full box.
        assert_eq!(hv_ratio(&[vec![50.0, 50.0]], &frame).unwrap(), 1.0);
        // (35, 35) covers half of each side.
        assert_eq!(hv_ratio(&[vec![35.0, 35.0]], &frame).unwrap(), 0.25);
        // below the reference: nothing
        assert_eq!(hv_ratio(&[vec![10.0, 40.0]], &frame).unwrap(), 0.0);
    }

    #[test]
    fn csv_rows() {
        let csv = front_to_csv(&[vec![1.5, 2.0], vec![0.1, 3.25]]);
        assert_eq!(csv, "f1,f2\n1.5,2\n0.1,3.25\n");
    }

    fn points(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, m), 0..12)
    }

    proptest! {
        #[test]
        fn archive_stays_mutually_non_dominated(pts in points(2)) {
            let mut a = ParetoArchive::new(Sense::Min);
            for p in &pts {
                a.insert(dummy(), p.clone());
                let f = a.front();
                for (i, x) in f.iter().enumerate() {
                    for (j, y) in f.iter().enumerate() {
                        if i != j {
                            prop_assert!(!dominates(x, y, Sense::Min).unwrap());
                            prop_assert!(x != y);
                        }
                    }
                }
            }
        }

        #[test]
        fn adding_a_point_never_shrinks_volume(pts in points(3), extra in proptest::collection::vec(0.0f64..10.0, 3)) {
            let r = [10.0, 10.0, 10.0];
            let before = hypervolume(&pts, &r).unwrap();
            let mut more = pts.clone();
            more.push(extra);
            prop_assert!(hypervolume(&more, &r).unwrap() >= before - 1e-9);
        }

        #[test]
        fn mirrored_fronts_have_equal_ratio(pts in points(2)) {
            let min_frame = HvFrame::new(vec![10.0, 10.0], vec![0.0, 0.0], Sense::Min).unwrap();
            let max_frame = HvFrame::new(vec![-10.0, -10.0], vec![0.0, 0.0], Sense::Max).unwrap();
            let flipped: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|v| -v).collect()).collect();
            let a = hv_ratio(&pts, &min_frame).unwrap();
            let b = hv_ratio(&flipped, &max_frame).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
