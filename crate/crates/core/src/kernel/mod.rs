//! DiKernel carriers and the DeGroot update operator.
//!
//! A [`BlockKernel`] is exact block-constant algebra; a [`GridKernel`] holds
//! midpoint samples of an analytic kernel and is integrated with the midpoint
//! rule. Both act on piecewise-constant opinion functions through the same
//! density-times-weight formula, so the grid case is the block formula on the
//! uniform partition.

pub mod analytic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{OpinionFunction, StepFunction};
use crate::partition::IntervalPartition;

pub use analytic::{AnalyticKernel, LipschitzMeta};

/// Row-defect tolerance for block kernels.
pub const BLOCK_ROW_TOL: f64 = 1e-9;

/// Largest excursion outside `[-1, 1]` that `apply` silently clamps.
pub const CLAMP_SLACK: f64 = 1e-6;

fn check_matrix(values: &[Vec<f64>], n: usize) -> Result<()> {
    if values.len() != n || values.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("expected a {n}x{n} matrix")));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite kernel entry".into()));
    }
    Ok(())
}

fn max_entry(values: &[Vec<f64>]) -> f64 {
    values.iter().flatten().copied().fold(0.0, f64::max)
}

/// Block-constant DiKernel: densities `values[i][j]` on `V_i × V_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockKernel {
    partition: IntervalPartition,
    values: Vec<Vec<f64>>,
    bound: f64,
}

impl BlockKernel {
    pub fn new(partition: IntervalPartition, values: Vec<Vec<f64>>) -> Result<Self> {
        check_matrix(&values, partition.len())?;
        if values.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("kernel entries must be non-negative".into()));
        }
        let bound = max_entry(&values);
        Ok(Self {
            partition,
            values,
            bound,
        })
    }

    /// Like [`BlockKernel::new`] with an explicit bound `M`.
    pub fn with_bound(partition: IntervalPartition, values: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let mut k = Self::new(partition, values)?;
        if k.bound > bound {
            return Err(Error::InvalidArgument(format!(
                "entry {} exceeds the bound {bound}",
                k.bound
            )));
        }
        k.bound = bound;
        Ok(k)
    }

    /// The kernel that is identically `c`.
    pub fn constant(partition: IntervalPartition, c: f64) -> Result<Self> {
        let n = partition.len();
        Self::new(partition, vec![vec![c; n]; n])
    }

    /// Uni-type kernel `W(x, y) = h(y)`.
    pub fn unitype(h: &StepFunction) -> Result<Self> {
        let n = h.partition().len();
        Self::new(h.partition().clone(), vec![h.values().to_vec(); n])
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same kernel expressed on a refinement of its partition.
    pub fn refine_to(&self, finer: &IntervalPartition) -> Result<Self> {
        let parents = finer.parent_cells(&self.partition)?;
        let values = parents
            .iter()
            .map(|&a| parents.iter().map(|&b| self.values[a][b]).collect())
            .collect();
        Ok(Self {
            partition: finer.clone(),
            values,
            bound: self.bound,
        })
    }

    /// `(1 − γ)·W + γ·1`, a γ-mixing lazy blend with the uniform kernel.
    pub fn blend_with_uniform(&self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidArgument("blend weight must lie in [0, 1]".into()));
        }
        let values = self
            .values
            .iter()
            .map(|r| r.iter().map(|v| (1.0 - gamma) * v + gamma).collect())
            .collect();
        Self::new(self.partition.clone(), values)
    }

    /// The row density when every row is identical within `tol`.
    pub fn unitype_density(&self, tol: f64) -> Option<StepFunction> {
        let first = &self.values[0];
        let same = self
            .values
            .iter()
            .all(|r| r.iter().zip(first).all(|(a, b)| (a - b).abs() <= tol));
        same.then(|| StepFunction::new(self.partition.clone(), first.clone()).unwrap())
    }
}

/// Midpoint samples `samples[i][j] = W((i+½)/n, (j+½)/n)`.
///
/// Kernels with exact cell integrals are sampled by their cell mean instead,
/// which equals the midpoint value on every cell where the kernel is affine
/// and stays well defined when a discontinuity passes through the midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    samples: Vec<Vec<f64>>,
    bound: f64,
}

impl GridKernel {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        check_matrix(&samples, n)?;
        if samples.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("kernel samples must be non-negative".into()));
        }
        let bound = max_entry(&samples);
        Ok(Self { samples, bound })
    }

    pub fn sample(kernel: &dyn AnalyticKernel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("grid size must be positive".into()));
        }
        let h = 1.0 / n as f64;
        let samples = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                (0..n)
                    .map(|j| {
                        let y = (j as f64 + 0.5) * h;
                        if kernel.exact_cells() {
                            kernel.cell_mean(x - 0.5 * h, x + 0.5 * h, y - 0.5 * h, y + 0.5 * h)
                        } else {
                            kernel.eval(x, y)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut g = Self::new(samples)?;
        g.bound = g.bound.max(kernel.bound());
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn partition(&self) -> IntervalPartition {
        IntervalPartition::uniform(self.n()).expect("n >= 1")
    }
}

/// Either kernel carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub enum Kernel {
    Block(BlockKernel),
    Grid(GridKernel),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum KernelRepr {
    Block {
        partition: Vec<f64>,
        values: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    Grid {
        n: usize,
        samples: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        match r {
            KernelRepr::Block {
                partition,
                values,
                bound,
            } => {
                let p = IntervalPartition::new(partition)?;
                let k = match bound {
                    Some(m) => BlockKernel::with_bound(p, values, m)?,
                    None => BlockKernel::new(p, values)?,
                };
                Ok(Kernel::Block(k))
            }
            KernelRepr::Grid { n, samples, bound } => {
                if samples.len() != n {
                    return Err(Error::Shape(format!("grid declares n = {n} but has {} rows", samples.len())));
                }
                let mut g = GridKernel::new(samples)?;
                if let Some(m) = bound {
                    if g.bound > m {
                        return Err(Error::InvalidArgument("sample exceeds the bound".into()));
                    }
                    g.bound = m;
                }
                Ok(Kernel::Grid(g))
            }
        }
    }
}

impl From<Kernel> for KernelRepr {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Block(b) => KernelRepr::Block {
                partition: b.partition.breakpoints().to_vec(),
                bound: (b.bound != max_entry(&b.values)).then_some(b.bound),
                values: b.values,
            },
            Kernel::Grid(g) => KernelRepr::Grid {
                n: g.n(),
                bound: (g.bound != max_entry(&g.samples)).then_some(g.bound),
                samples: g.samples,
            },
        }
    }
}

impl From<BlockKernel> for Kernel {
    fn from(k: BlockKernel) -> Self {
        Kernel::Block(k)
    }
}

impl From<GridKernel> for Kernel {
    fn from(k: GridKernel) -> Self {
        Kernel::Grid(k)
    }
}

impl Kernel {
    pub fn partition(&self) -> IntervalPartition {
        match self {
            Kernel::Block(b) => b.partition.clone(),
            Kernel::Grid(g) => g.partition(),
        }
    }

    /// Density matrix: block values or grid samples.
    pub fn density(&self) -> &[Vec<f64>] {
        match self {
            Kernel::Block(b) => &b.values,
            Kernel::Grid(g) => &g.samples,
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            Kernel::Block(b) => b.bound,
            Kernel::Grid(g) => g.bound,
        }
    }

    /// Row-defect tolerance: `1e-9` for blocks, `10·M/n` for grids.
    pub fn row_tolerance(&self) -> f64 {
        match self {
            Kernel::Block(_) => BLOCK_ROW_TOL,
            Kernel::Grid(g) => 10.0 * g.bound.max(1.0) / g.n() as f64,
        }
    }

    /// Block view of the kernel (grids become blocks on the uniform partition).
    pub fn to_block(&self) -> BlockKernel {
        match self {
            Kernel::Block(b) => b.clone(),
            Kernel::Grid(g) => BlockKernel {
                partition: g.partition(),
                values: g.samples.clone(),
                bound: g.bound,
            },
        }
    }

    /// Uni-type density if all rows coincide within `tol`.
    pub fn unitype_density(&self, tol: f64) -> Option<StepFunction> {
        self.to_block().unitype_density(tol)
    }
}

/// Outcome of [`check_row_stochastic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowCheck {
    pub ok: bool,
    pub max_defect: f64,
}

/// `max_i |Σ_j w_ij p_j − 1|` and whether it is within `tol`.
pub fn check_row_stochastic(kernel: &Kernel, tol: f64) -> RowCheck {
    let max_defect = row_defect(kernel.density(), &kernel.partition().weights());
    RowCheck {
        ok: max_defect <= tol,
        max_defect,
    }
}

fn row_defect(values: &[Vec<f64>], weights: &[f64]) -> f64 {
    values
        .iter()
        .map(|r| (r.iter().zip(weights).map(|(w, p)| w * p).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Minimum entry of the kernel; the kernel is γ-mixing for this γ.
pub fn gamma_mixing(kernel: &Kernel) -> f64 {
    kernel
        .density()
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `(T(W)f)(x) = ∫ W(x, y) f(y) dy`.
pub fn apply(kernel: &Kernel, f: &OpinionFunction) -> Result<OpinionFunction> {
    let partition = kernel.partition();
    if !partition.same_as(f.partition()) {
        return Err(Error::Shape(format!(
            "opinion function has {} cells on a different partition than the kernel ({} cells)",
            f.partition().len(),
            partition.len()
        )));
    }
    let weights = partition.weights();
    let defect = row_defect(kernel.density(), &weights);
    if defect > kernel.row_tolerance() {
        return Err(Error::Contract(format!(
            "kernel is not row-stochastic (max row defect {defect:.3e})"
        )));
    }
    let raw = apply_raw(kernel.density(), &weights, f.values());
    let mut out = Vec::with_capacity(raw.len());
    for v in raw {
        if v.abs() > 1.0 + CLAMP_SLACK {
            return Err(Error::Contract(format!(
                "updated opinion {v} leaves [-1, 1] beyond the clamp slack"
            )));
        }
        out.push(v.clamp(-1.0, 1.0));
    }
    OpinionFunction::new(partition, out)
}

/// `out_i = Σ_j w_ij p_j f_j` without any checks.
pub(crate) fn apply_raw(values: &[Vec<f64>], weights: &[f64], f: &[f64]) -> Vec<f64> {
    let wf: Vec<f64> = weights.iter().zip(f).map(|(p, v)| p * v).collect();
    values
        .iter()
        .map(|r| r.iter().zip(&wf).map(|(w, x)| w * x).sum())
        .collect()
}

/// Trajectory `f_0, …, f_t`.
pub fn iterate(kernel: &Kernel, f0: &OpinionFunction, t: usize) -> Result<Vec<OpinionFunction>> {
    let mut out = Vec::with_capacity(t + 1);
    out.push(f0.clone());
    for _ in 0..t {
        let next = apply(kernel, out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

/// `(W ∗ V)(x, y) = ∫ W(x, u) V(u, y) du`, computed on the common refinement.
pub fn kernel_product(w: &BlockKernel, v: &BlockKernel) -> Result<BlockKernel> {
    let (w, v) = if w.partition.same_as(&v.partition) {
        (w.clone(), v.clone())
    } else {
        let common = w.partition.common_refinement(&v.partition);
        (w.refine_to(&common)?, v.refine_to(&common)?)
    };
    if w.len() != v.len() {
        return Err(Error::Shape("kernel partitions do not align".into()));
    }
    let p = w.partition.weights();
    let n = w.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let a = w.values[i][k] * p[k];
            if a == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += a * v.values[k][j];
            }
        }
    }
    BlockKernel::new(w.partition.clone(), out)
}

/// `W^t` via repeated products; `W^0` is not a bounded kernel so `t ≥ 1`.
pub fn kernel_power(w: &BlockKernel, t: usize) -> Result<BlockKernel> {
    if t == 0 {
        return Err(Error::InvalidArgument("kernel power needs t >= 1".into()));
    }
    let mut acc = w.clone();
    for _ in 1..t {
        acc = kernel_product(&acc, w)?;
    }
    Ok(acc)
}
