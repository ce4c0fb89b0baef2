//! Distances between opinion functions and kernels, and the dynamic error bounds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::OpinionFunction;
use crate::kernel::{AnalyticKernel, BlockKernel, LipschitzMeta};
use crate::partition::IntervalPartition;
use crate::transform::discretize_analytic;

/// Largest cell count accepted by [`cut_norm_exact`].
pub const EXACT_CUT_LIMIT: usize = 22;

/// Block-constant kernel with signed entries, e.g. a difference `W − V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedBlockKernel {
    partition: IntervalPartition,
    values: Vec<Vec<f64>>,
}

impl SignedBlockKernel {
    pub fn new(partition: IntervalPartition, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = partition.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("expected a {n}x{n} matrix")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        Ok(Self { partition, values })
    }

    /// `W − V` on the common refinement of both partitions.
    pub fn difference(w: &BlockKernel, v: &BlockKernel) -> Self {
        let common = w.partition().common_refinement(v.partition());
        let w = w.refine_to(&common).expect("refinement");
        let v = v.refine_to(&common).expect("refinement");
        let values = w
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Self {
            partition: common,
            values,
        }
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn negate(&self) -> Self {
        Self {
            partition: self.partition.clone(),
            values: self.values.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
        }
    }

    /// `∬ |U|`.
    pub fn l1_norm(&self) -> f64 {
        let p = self.partition.weights();
        self.values
            .iter()
            .zip(&p)
            .map(|(r, pi)| r.iter().zip(&p).map(|(u, pj)| u.abs() * pi * pj).sum::<f64>())
            .sum()
    }

    /// Cell masses `a_ij = p_i p_j U_ij`.
    fn masses(&self) -> Vec<Vec<f64>> {
        let p = self.partition.weights();
        self.values
            .iter()
            .zip(&p)
            .map(|(r, pi)| r.iter().zip(&p).map(|(u, pj)| u * pi * pj).collect())
            .collect()
    }
}

/// Cut-norm value together with witnessing row and column cell sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutNorm {
    pub value: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

fn mask_to_cells(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Best column set for fixed column sums: all positive or all negative columns.
fn best_cols(col: &[f64]) -> (f64, u64) {
    let (mut pos, mut neg) = (0.0, 0.0);
    let (mut pos_mask, mut neg_mask) = (0u64, 0u64);
    for (j, &c) in col.iter().enumerate() {
        if c > 0.0 {
            pos += c;
            pos_mask |= 1 << j;
        } else if c < 0.0 {
            neg -= c;
            neg_mask |= 1 << j;
        }
    }
    if pos >= neg {
        (pos, pos_mask)
    } else {
        (neg, neg_mask)
    }
}

/// Exact cut norm by enumerating row subsets (Gray code) and optimizing columns in closed form.
///
/// The objective is bilinear in per-cell inclusion fractions, so the supremum
/// over measurable rectangles is attained on unions of whole cells.
pub fn cut_norm_exact(u: &SignedBlockKernel) -> Result<CutNorm> {
    let n = u.len();
    if n > EXACT_CUT_LIMIT {
        return Err(Error::Budget {
            cells: n,
            limit: EXACT_CUT_LIMIT,
        });
    }
    let a = u.masses();
    let mut col = vec![0.0; n];
    let (mut best, mut best_rows, mut best_cols_mask) = (0.0, 0u64, 0u64);
    let mut rows = 0u64;
    for k in 1u64..(1u64 << n) {
        let flip = k.trailing_zeros() as usize;
        rows ^= 1 << flip;
        let sign = if rows >> flip & 1 == 1 { 1.0 } else { -1.0 };
        for (c, x) in col.iter_mut().zip(&a[flip]) {
            *c += sign * x;
        }
        let (v, cols) = best_cols(&col);
        if v > best {
            best = v;
            best_rows = rows;
            best_cols_mask = cols;
        }
    }
    if best == 0.0 {
        return Ok(CutNorm { value: 0.0, rows: vec![], cols: vec![] });
    }
    // recompute the witness value directly to shed Gray-code rounding drift
    let rows_v = mask_to_cells(best_rows, n);
    let cols_v = mask_to_cells(best_cols_mask, n);
    let value = rows_v
        .iter()
        .map(|&i| cols_v.iter().map(|&j| a[i][j]).sum::<f64>())
        .sum::<f64>()
        .abs();
    Ok(CutNorm {
        value,
        rows: rows_v,
        cols: cols_v,
    })
}

/// Alternating maximization from random column sets; a lower bound on the cut norm.
pub fn cut_norm_heuristic(u: &SignedBlockKernel, restarts: usize, seed: u64) -> CutNorm {
    let n = u.len();
    let a = u.masses();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = CutNorm { value: 0.0, rows: vec![], cols: vec![] };
    for _ in 0..restarts.max(1) {
        let start: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        for sign in [1.0, -1.0] {
            let mut cols = start.clone();
            let mut rows = vec![false; n];
            let mut value = f64::NEG_INFINITY;
            loop {
                for i in 0..n {
                    let r: f64 = (0..n).filter(|&j| cols[j]).map(|j| a[i][j]).sum();
                    rows[i] = sign * r > 0.0;
                }
                for j in 0..n {
                    let c: f64 = (0..n).filter(|&i| rows[i]).map(|i| a[i][j]).sum();
                    cols[j] = sign * c > 0.0;
                }
                let v: f64 = sign
                    * (0..n)
                        .filter(|&i| rows[i])
                        .map(|i| (0..n).filter(|&j| cols[j]).map(|j| a[i][j]).sum::<f64>())
                        .sum::<f64>();
                if v <= value + 1e-15 {
                    break;
                }
                value = v;
            }
            if value > best.value {
                best = CutNorm {
                    value,
                    rows: (0..n).filter(|&i| rows[i]).collect(),
                    cols: (0..n).filter(|&j| cols[j]).collect(),
                };
            }
        }
    }
    best
}

/// Exact cut norm when small enough, otherwise the heuristic.
pub fn cut_norm(u: &SignedBlockKernel, restarts: usize, seed: u64) -> CutNorm {
    cut_norm_exact(u).unwrap_or_else(|_| cut_norm_heuristic(u, restarts, seed))
}

/// Two-sided estimate of `‖W − W_V‖□` for an analytic `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutEstimate {
    /// Cut norm of `W_fine − W_V`, never above the true distance.
    pub lower: f64,
    /// `lower` plus the partition bound for the fine grid, when Lipschitz metadata exists.
    pub upper: Option<f64>,
    pub fine_cells: usize,
    pub exact: bool,
}

/// Measures `‖W − W_V‖□` through a fine uniform discretization of `W` refined with `V`.
pub fn analytic_cut_distance(
    kernel: &dyn AnalyticKernel,
    coarse: &IntervalPartition,
    fine_cells: usize,
    restarts: usize,
    seed: u64,
) -> Result<CutEstimate> {
    let fine = IntervalPartition::uniform(fine_cells)?.common_refinement(coarse);
    let w_fine = discretize_analytic(kernel, &fine);
    let w_coarse = discretize_analytic(kernel, coarse);
    let diff = SignedBlockKernel::difference(&w_fine, &w_coarse);
    let (lower, exact) = match cut_norm_exact(&diff) {
        Ok(c) => (c.value, true),
        Err(_) => (cut_norm_heuristic(&diff, restarts, seed).value, false),
    };
    let upper = kernel
        .lipschitz()
        .map(|m| lower + bound_partition(&m, fine_cells).unwrap_or(f64::INFINITY));
    Ok(CutEstimate {
        lower,
        upper,
        fine_cells: fine.len(),
        exact,
    })
}

/// `‖f − g‖₁`.
pub fn l1_distance(f: &OpinionFunction, g: &OpinionFunction) -> f64 {
    f.as_step().l1_distance(g.as_step())
}

/// `‖f − g‖₁ + 4‖W − V‖□`.
///
/// The `‖f − g‖₁` term assumes `T(W)` does not expand L¹ distances, which holds
/// when every column of `W` integrates to at most 1 (for instance symmetric
/// kernels). With `f = g` the bound holds for any row-stochastic pair.
pub fn bound_one_step(l1: f64, cut: f64) -> f64 {
    l1 + 4.0 * cut
}

/// `min(2, 4 t ‖W − W_V‖□)`.
pub fn bound_dynamic(t: usize, cut: f64) -> f64 {
    (4.0 * t as f64 * cut).min(2.0)
}

/// `‖f − g‖₁ + 4 t ‖W − V‖□`, uncapped; see [`bound_one_step`] for when the
/// `‖f − g‖₁` term is valid.
pub fn bound_two_kernel_dynamic(t: usize, l1: f64, cut: f64) -> f64 {
    l1 + 4.0 * t as f64 * cut
}

fn check_discount(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("discount factor {delta} not in (0, 1)")));
    }
    Ok(())
}

/// `4αδ/(1−δ)² ‖W − W_V‖□`.
pub fn bound_discounted(alpha: f64, delta: f64, cut: f64) -> Result<f64> {
    check_discount(delta)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("alpha must be >= 0".into()));
    }
    Ok(4.0 * alpha * delta / (1.0 - delta).powi(2) * cut)
}

/// `αδ/(1−δ) ‖f − g‖₁ + 4αδ/(1−δ)² ‖W − V‖□`.
pub fn bound_two_kernel_discounted(alpha: f64, delta: f64, l1: f64, cut: f64) -> Result<f64> {
    check_discount(delta)?;
    Ok(alpha * delta / (1.0 - delta) * l1 + bound_discounted(alpha, delta, cut)?)
}

/// `2θ/n + M K²/n²`.
pub fn bound_partition(meta: &LipschitzMeta, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let n = n as f64;
    let k = meta.pieces as f64;
    Ok(2.0 * meta.theta / n + meta.bound * k * k / (n * n))
}

/// Smallest integer `n₀ > (8θ + √(64θ² + 16K²Mη)) / (2η)`, bumped until `4·bound_partition(n₀) < η`.
pub fn min_partition_size(eta: f64, meta: &LipschitzMeta) -> Result<usize> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be > 0".into()));
    }
    let (theta, k, m) = (meta.theta, meta.pieces as f64, meta.bound);
    let root = (8.0 * theta + (64.0 * theta * theta + 16.0 * k * k * m * eta).sqrt()) / (2.0 * eta);
    let mut n0 = root.floor() as usize + 1;
    while 4.0 * bound_partition(meta, n0)? >= eta {
        n0 += 1;
    }
    Ok(n0)
}

/// Which bound a [`BoundReport`] instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    OneStep,
    Dynamic,
    Discounted,
    TwoKernelDiscounted,
    Partition,
    MinPartitionSize,
    CutNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: f64,
    pub kind: BoundKind,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundReport {
    pub fn new(kind: BoundKind, bound: f64, inputs: &[(&str, f64)]) -> Self {
        Self {
            bound,
            kind,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}
