//! Maps between weighted DeGroot matrices and block-constant DiKernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::OpinionFunction;
use crate::kernel::{AnalyticKernel, BlockKernel, Kernel};
use crate::partition::{IntervalPartition, MERGE_TOL};

/// Row-sum and weight-sum tolerance for user-supplied models.
pub const MODEL_TOL: f64 = 1e-12;

/// A row-stochastic matrix with agent weights and optional opinions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDeGrootModel {
    pub matrix: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opinions: Option<Vec<f64>>,
}

impl WeightedDeGrootModel {
    pub fn new(matrix: Vec<Vec<f64>>, weights: Vec<f64>, opinions: Option<Vec<f64>>) -> Result<Self> {
        let m = Self { matrix, weights, opinions };
        m.validate()?;
        Ok(m)
    }

    /// Classical DeGroot model: uniform weights `1/n`.
    pub fn uniform(matrix: Vec<Vec<f64>>, opinions: Option<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        Self::new(matrix, vec![1.0 / n as f64; n], opinions)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.len();
        if n == 0 || self.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("model matrix must be square and non-empty".into()));
        }
        if self.weights.len() != n {
            return Err(Error::Shape(format!("{} weights for {n} agents", self.weights.len())));
        }
        if self.matrix.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("matrix entries must be finite and non-negative".into()));
        }
        for (i, r) in self.matrix.iter().enumerate() {
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > MODEL_TOL {
                return Err(Error::Contract(format!("row {i} sums to {s}, expected 1")));
            }
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > MODEL_TOL {
            return Err(Error::Contract(format!("weights sum to {total}, expected 1")));
        }
        if let Some(f) = &self.opinions {
            if f.len() != n {
                return Err(Error::Shape(format!("{} opinions for {n} agents", f.len())));
            }
            if f.iter().any(|v| !(v.abs() <= 1.0)) {
                return Err(Error::Domain("opinions must lie in [-1, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// The partition whose cell lengths are the weights.
    pub fn natural_partition(&self) -> Result<IntervalPartition> {
        IntervalPartition::from_weights(&self.weights)
    }

    /// One discrete step `f ↦ Ŵ f`.
    pub fn step(&self, f: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|r| r.iter().zip(f).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// Block-constant kernel `w_ij / p_j` on `partition`, plus the step opinions if present.
pub fn lift(
    model: &WeightedDeGrootModel,
    partition: &IntervalPartition,
) -> Result<(BlockKernel, Option<OpinionFunction>)> {
    model.validate()?;
    if partition.len() != model.len() {
        return Err(Error::Shape(format!(
            "partition has {} cells, model has {} agents",
            partition.len(),
            model.len()
        )));
    }
    let p = partition.weights();
    if p.iter().zip(&model.weights).any(|(a, b)| (a - b).abs() > MODEL_TOL) {
        return Err(Error::InvalidArgument(
            "partition cell lengths do not match the model weights".into(),
        ));
    }
    let values = model
        .matrix
        .iter()
        .map(|r| r.iter().zip(&p).map(|(w, pj)| w / pj).collect())
        .collect();
    let kernel = BlockKernel::new(partition.clone(), values)?;
    let opinions = match &model.opinions {
        Some(f) => Some(lift_opinions(f, partition)?),
        None => None,
    };
    Ok((kernel, opinions))
}

/// [`lift`] on the partition built from the model's own weights.
pub fn lift_natural(model: &WeightedDeGrootModel) -> Result<(BlockKernel, Option<OpinionFunction>)> {
    lift(model, &model.natural_partition()?)
}

/// Step function taking value `f̂_i` on cell `i`.
pub fn lift_opinions(values: &[f64], partition: &IntervalPartition) -> Result<OpinionFunction> {
    if values.len() != partition.len() {
        return Err(Error::Shape(format!(
            "{} opinions for {} cells",
            values.len(),
            partition.len()
        )));
    }
    OpinionFunction::new(partition.clone(), values.to_vec())
}

/// Cell means of `f` over `partition`.
pub fn project_opinions(f: &OpinionFunction, partition: &IntervalPartition) -> Vec<f64> {
    f.project(partition).values().to_vec()
}

/// `matrix[i][j] = values[i][j]·p_j`, weights the cell lengths.
pub fn block_to_model(kernel: &BlockKernel) -> WeightedDeGrootModel {
    let p = kernel.partition().weights();
    let matrix = kernel
        .values()
        .iter()
        .map(|r| r.iter().zip(&p).map(|(w, pj)| w * pj).collect())
        .collect();
    WeightedDeGrootModel {
        matrix,
        weights: p,
        opinions: None,
    }
}

/// Result of discretizing a kernel onto a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub kernel: BlockKernel,
    /// Set when a grid kernel forced the breakpoints onto its grid lines.
    pub snapped: bool,
}

/// Block averages of a block kernel over `V × V`; exact for any `V`.
pub fn discretize_block(kernel: &BlockKernel, target: &IntervalPartition) -> BlockKernel {
    let overlap = target.overlaps(kernel.partition());
    let q = target.weights();
    let w = kernel.values();
    let n = target.len();
    // left[a][j] = Σ_i O[a][i] w_ij
    let left: Vec<Vec<f64>> = overlap
        .iter()
        .map(|oa| {
            (0..kernel.len())
                .map(|j| oa.iter().zip(w).map(|(o, r)| o * r[j]).sum())
                .collect()
        })
        .collect();
    let values: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let s: f64 = left[a].iter().zip(&overlap[b]).map(|(l, o)| l * o).sum();
                    s / (q[a] * q[b])
                })
                .collect()
        })
        .collect();
    let bound = values.iter().flatten().copied().fold(kernel.bound(), f64::max);
    BlockKernel::with_bound(target.clone(), values, bound).expect("bound covers every entry")
}

/// Discretization of a block or grid kernel onto `target`.
///
/// Grid kernels need breakpoints on grid lines; others are snapped to the
/// nearest line and the result is flagged.
pub fn discretize_kernel(kernel: &Kernel, target: &IntervalPartition) -> Result<Discretization> {
    match kernel {
        Kernel::Block(b) => Ok(Discretization {
            kernel: discretize_block(b, target),
            snapped: false,
        }),
        Kernel::Grid(g) => {
            let n = g.n() as f64;
            let snapped_pts: Vec<f64> = target
                .breakpoints()
                .iter()
                .map(|&b| (b * n).round() / n)
                .collect();
            let snapped = snapped_pts
                .iter()
                .zip(target.breakpoints())
                .any(|(a, b)| (a - b).abs() > MERGE_TOL);
            let snapped_partition = IntervalPartition::new(snapped_pts).map_err(|_| {
                Error::InvalidArgument(format!(
                    "partition is finer than the {}-point grid; two breakpoints snap to one grid line",
                    g.n()
                ))
            })?;
            Ok(Discretization {
                kernel: discretize_block(&kernel.to_block(), &snapped_partition),
                snapped,
            })
        }
    }
}

/// Block averages of an analytic kernel (exact when the kernel integrates cells exactly).
pub fn discretize_analytic(kernel: &dyn AnalyticKernel, target: &IntervalPartition) -> BlockKernel {
    let n = target.len();
    let values = (0..n)
        .map(|a| {
            let (x0, x1) = target.cell(a);
            (0..n)
                .map(|b| {
                    let (y0, y1) = target.cell(b);
                    kernel.cell_mean(x0, x1, y0, y1).max(0.0)
                })
                .collect()
        })
        .collect();
    let mut k = BlockKernel::new(target.clone(), values).expect("non-negative averages");
    if k.bound() < kernel.bound() {
        k = BlockKernel::with_bound(target.clone(), k.values().to_vec(), kernel.bound()).unwrap();
    }
    k
}

/// Contiguous ordered groups of agent indices (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub groups: Vec<Vec<usize>>,
}

impl Grouping {
    /// Group boundaries as cumulative agent counts, checking contiguity and coverage of `0..n`.
    fn boundaries(&self, n: usize) -> Result<Vec<usize>> {
        let mut next = 0;
        let mut bounds = vec![0];
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::InvalidArgument("empty group".into()));
            }
            for &i in g {
                if i != next {
                    return Err(Error::InvalidArgument(
                        "groups must be contiguous, ordered and cover every agent exactly once".into(),
                    ));
                }
                next += 1;
            }
            bounds.push(next);
        }
        if next != n {
            return Err(Error::InvalidArgument(format!(
                "groups cover {next} agents, model has {n}"
            )));
        }
        Ok(bounds)
    }
}

/// Lift, discretize onto the group partition, and read back the smaller model.
pub fn reduce_dimension(model: &WeightedDeGrootModel, grouping: &Grouping) -> Result<WeightedDeGrootModel> {
    model.validate()?;
    let bounds = grouping.boundaries(model.len())?;
    let fine = model.natural_partition()?;
    let (kernel, opinions) = lift(model, &fine)?;
    let coarse_pts: Vec<f64> = bounds.iter().map(|&k| fine.breakpoints()[k]).collect();
    let coarse = IntervalPartition::new(coarse_pts)?;
    let reduced = discretize_block(&kernel, &coarse);
    let mut out = block_to_model(&reduced);
    out.opinions = opinions.map(|f| project_opinions(&f, &coarse));
    Ok(out)
}
