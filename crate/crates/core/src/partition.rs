//! Interval partitions of `[0, 1]`.
//!
//! Cells are half-open `[a_j, a_{j+1})` except the last one, which is closed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakpoints closer than this are treated as the same point.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionRepr", into = "PartitionRepr")]
pub struct IntervalPartition {
    breakpoints: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    breakpoints: Vec<f64>,
}

impl TryFrom<PartitionRepr> for IntervalPartition {
    type Error = Error;
    fn try_from(r: PartitionRepr) -> Result<Self> {
        IntervalPartition::new(r.breakpoints)
    }
}

impl From<IntervalPartition> for PartitionRepr {
    fn from(p: IntervalPartition) -> Self {
        PartitionRepr {
            breakpoints: p.breakpoints,
        }
    }
}

impl IntervalPartition {
    /// Builds a partition from explicit breakpoints `0 = a_0 < ... < a_J = 1`.
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "a partition needs at least two breakpoints".into(),
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite breakpoint".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    /// The uniform partition into `n` cells of length `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("uniform partition needs n >= 1".into()));
        }
        let mut breakpoints: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        breakpoints[n] = 1.0;
        Ok(Self { breakpoints })
    }

    /// Partition whose cell lengths are the given weights (renormalized cumulative sums).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut breakpoints = Vec::with_capacity(weights.len() + 1);
        breakpoints.push(0.0);
        let mut acc = 0.0;
        for w in &weights[..weights.len() - 1] {
            acc += w;
            breakpoints.push(acc);
        }
        breakpoints.push(1.0);
        Self::new(breakpoints)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell `j` as `(a_j, a_{j+1})`.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        (self.breakpoints[j], self.breakpoints[j + 1])
    }

    /// Cell lengths `p_j = a_{j+1} - a_j`.
    pub fn weights(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index `j` with `a_j <= x < a_{j+1}`; `x = 1` lands in the last cell.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("{x} is outside [0, 1]")));
        }
        let j = self.breakpoints.partition_point(|&a| a <= x);
        Ok(j.saturating_sub(1).min(self.len() - 1))
    }

    /// Sorted union of breakpoints, merging points within [`MERGE_TOL`].
    pub fn common_refinement(&self, other: &IntervalPartition) -> IntervalPartition {
        let mut all: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut merged: Vec<f64> = Vec::with_capacity(all.len());
        for b in all {
            match merged.last() {
                Some(&last) if b - last <= MERGE_TOL => {}
                _ => merged.push(b),
            }
        }
        // the merge keeps the first of a cluster; the right end must stay exactly 1
        let last = merged.len() - 1;
        if merged[last] != 1.0 {
            if 1.0 - merged[last] <= MERGE_TOL {
                merged[last] = 1.0;
            } else {
                merged.push(1.0);
            }
        }
        IntervalPartition { breakpoints: merged }
    }

    /// True when every breakpoint of `coarse` is (within [`MERGE_TOL`]) a breakpoint of `self`.
    pub fn refines(&self, coarse: &IntervalPartition) -> bool {
        coarse.breakpoints.iter().all(|&b| {
            let k = self.breakpoints.partition_point(|&a| a < b - MERGE_TOL);
            k < self.breakpoints.len() && (self.breakpoints[k] - b).abs() <= MERGE_TOL
        })
    }

    /// For each cell of `self` (which must refine `coarse`), the index of the enclosing coarse cell.
    pub fn parent_cells(&self, coarse: &IntervalPartition) -> Result<Vec<usize>> {
        if !self.refines(coarse) {
            return Err(Error::Shape("partition is not a refinement".into()));
        }
        Ok(self
            .midpoints()
            .into_iter()
            .map(|m| coarse.locate(m).expect("midpoint inside [0,1]"))
            .collect())
    }

    /// `overlap[a][i] = λ(self_a ∩ other_i)`.
    pub fn overlaps(&self, other: &IntervalPartition) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; other.len()]; self.len()];
        let (mut a, mut i) = (0, 0);
        while a < self.len() && i < other.len() {
            let (lo_a, hi_a) = self.cell(a);
            let (lo_i, hi_i) = other.cell(i);
            let len = hi_a.min(hi_i) - lo_a.max(lo_i);
            if len > 0.0 {
                out[a][i] = len;
            }
            if hi_a < hi_i {
                a += 1;
            } else if hi_i < hi_a {
                i += 1;
            } else {
                a += 1;
                i += 1;
            }
        }
        out
    }

    /// Breakpoint-wise equality within [`MERGE_TOL`].
    pub fn same_as(&self, other: &IntervalPartition) -> bool {
        self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| (a - b).abs() <= MERGE_TOL)
    }
}
