//! Named analytic kernels with exact (or sub-sampled) cell averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-Lipschitz metadata: constant `theta`, `pieces` intervals, bound `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzMeta {
    pub theta: f64,
    pub pieces: usize,
    pub bound: f64,
}

impl LipschitzMeta {
    pub fn new(theta: f64, pieces: usize, bound: f64) -> Result<Self> {
        if pieces == 0 || !(theta >= 0.0) || !(bound > 1.0) {
            return Err(Error::InvalidArgument(
                "Lipschitz metadata needs K >= 1, theta >= 0 and M > 1".into(),
            ));
        }
        Ok(Self { theta, pieces, bound })
    }
}

/// A kernel given by a formula on `[0,1]²`.
pub trait AnalyticKernel: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, x: f64, y: f64) -> f64;

    /// Upper bound `M` on the kernel's values.
    fn bound(&self) -> f64;

    /// Mean of the kernel over `[x0,x1] × [y0,y1]`.
    ///
    /// The default sub-samples each side at 32 midpoints.
    fn cell_mean(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        const S: usize = 32;
        let xs: Vec<f64> = (0..S).map(|k| x0 + (k as f64 + 0.5) * (x1 - x0) / S as f64).collect();
        let ys: Vec<f64> = (0..S).map(|k| y0 + (k as f64 + 0.5) * (y1 - y0) / S as f64).collect();
        let total: f64 = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| self.eval(x, y)).sum();
        total / (S * S) as f64
    }

    /// Whether [`AnalyticKernel::cell_mean`] is exact.
    fn exact_cells(&self) -> bool {
        false
    }

    fn lipschitz(&self) -> Option<LipschitzMeta> {
        None
    }
}

/// Area of `{(x, y) ∈ [x0,x1]×[y0,y1] : x + y ≤ c}`.
fn area_below(c: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let ramp = |u: f64| if u > 0.0 { 0.5 * u * u } else { 0.0 };
    ramp(c - x0 - y0) - ramp(c - x1 - y0) - ramp(c - x0 - y1) + ramp(c - x1 - y1)
}

/// The anti-diagonal band kernel: `2` where `(x + y) mod 1 ∈ [0, ¼) ∪ [¾, 1)`, else `0`.
///
/// Its block averages on the uniform 2- and 4-partitions are
/// `[[½, 3/2], [3/2, ½]]` and the circulant `[[1,0,1,2], …]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AntiDiagonalBands;

impl AntiDiagonalBands {
    const BANDS: [(f64, f64); 3] = [(0.0, 0.25), (0.75, 1.25), (1.75, 2.0)];
}

impl AnalyticKernel for AntiDiagonalBands {
    fn name(&self) -> String {
        "bands".into()
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let s = x + y;
        if Self::BANDS.iter().any(|&(lo, hi)| s >= lo && s < hi) || s >= 2.0 {
            2.0
        } else {
            0.0
        }
    }

    fn bound(&self) -> f64 {
        2.0
    }

    fn cell_mean(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let area: f64 = Self::BANDS
            .iter()
            .map(|&(lo, hi)| area_below(hi, x0, x1, y0, y1) - area_below(lo, x0, x1, y0, y1))
            .sum();
        2.0 * area / ((x1 - x0) * (y1 - y0))
    }

    fn exact_cells(&self) -> bool {
        true
    }

    /// The discontinuities run along anti-diagonals, so no product partition
    /// makes the kernel Lipschitz on every block. The recorded metadata is the
    /// quarter partition (`K = 4`, `M = 2`) with an effective `θ = 1`: on a
    /// uniform partition into `n ≡ 0 mod 4` cells the blocks cut by the bands
    /// carry `∬|W − W_(n)| = 2/n`, which is exactly the `2θ/n` term.
    fn lipschitz(&self) -> Option<LipschitzMeta> {
        Some(LipschitzMeta { theta: 1.0, pieces: 4, bound: 2.0 })
    }
}

/// `W(x, y) = 1 + a(2x − 1)(2y − 1)`, row-stochastic for `|a| ≤ 1`.
#[derive(Debug, Clone, Copy)]
pub struct Bilinear {
    pub a: f64,
}

impl Bilinear {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.abs() <= 1.0) {
            return Err(Error::InvalidArgument("bilinear kernel needs |a| <= 1".into()));
        }
        Ok(Self { a })
    }
}

impl AnalyticKernel for Bilinear {
    fn name(&self) -> String {
        format!("bilinear:{}", self.a)
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        1.0 + self.a * (2.0 * x - 1.0) * (2.0 * y - 1.0)
    }

    fn bound(&self) -> f64 {
        1.0 + self.a.abs()
    }

    fn cell_mean(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        // mean of (2x − 1) over [x0, x1] is x0 + x1 − 1
        1.0 + self.a * (x0 + x1 - 1.0) * (y0 + y1 - 1.0)
    }

    fn exact_cells(&self) -> bool {
        true
    }

    /// `|∂W/∂x| ≤ 2|a|`; the recorded constant is the looser `4|a|`.
    fn lipschitz(&self) -> Option<LipschitzMeta> {
        LipschitzMeta::new(4.0 * self.a.abs(), 1, self.bound()).ok()
    }
}

/// Uni-type kernel `W(x, y) = (k + 1) y^k`.
#[derive(Debug, Clone, Copy)]
pub struct PowerUnitype {
    pub k: f64,
}

impl PowerUnitype {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(Error::InvalidArgument("uni-type exponent must be >= 0".into()));
        }
        Ok(Self { k })
    }

    pub fn density(&self, y: f64) -> f64 {
        (self.k + 1.0) * y.powf(self.k)
    }
}

impl AnalyticKernel for PowerUnitype {
    fn name(&self) -> String {
        format!("unitype:{}", self.k)
    }

    fn eval(&self, _x: f64, y: f64) -> f64 {
        self.density(y)
    }

    fn bound(&self) -> f64 {
        self.k + 1.0
    }

    fn cell_mean(&self, _x0: f64, _x1: f64, y0: f64, y1: f64) -> f64 {
        (y1.powf(self.k + 1.0) - y0.powf(self.k + 1.0)) / (y1 - y0)
    }

    fn exact_cells(&self) -> bool {
        true
    }

    fn lipschitz(&self) -> Option<LipschitzMeta> {
        let theta = if self.k >= 1.0 { (self.k + 1.0) * self.k } else { return None };
        LipschitzMeta::new(theta, 1, self.bound()).ok()
    }
}

/// `(1 − γ)·W + γ`.
pub struct Blend {
    pub gamma: f64,
    pub inner: Box<dyn AnalyticKernel>,
}

impl AnalyticKernel for Blend {
    fn name(&self) -> String {
        format!("blend:{}:{}", self.gamma, self.inner.name())
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        (1.0 - self.gamma) * self.inner.eval(x, y) + self.gamma
    }

    fn bound(&self) -> f64 {
        (1.0 - self.gamma) * self.inner.bound() + self.gamma
    }

    fn cell_mean(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        (1.0 - self.gamma) * self.inner.cell_mean(x0, x1, y0, y1) + self.gamma
    }

    fn exact_cells(&self) -> bool {
        self.inner.exact_cells()
    }

    fn lipschitz(&self) -> Option<LipschitzMeta> {
        let m = self.inner.lipschitz()?;
        LipschitzMeta::new((1.0 - self.gamma) * m.theta, m.pieces, self.bound().max(m.bound)).ok()
    }
}

/// The constant kernel `1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl AnalyticKernel for Uniform {
    fn name(&self) -> String {
        "constant".into()
    }

    fn eval(&self, _x: f64, _y: f64) -> f64 {
        1.0
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn cell_mean(&self, _: f64, _: f64, _: f64, _: f64) -> f64 {
        1.0
    }

    fn exact_cells(&self) -> bool {
        true
    }
}

/// Looks up a catalog entry: `bands`, `constant`, `bilinear:<a>`,
/// `unitype:<k>`, `blend:<gamma>:<inner>`.
pub fn catalog(name: &str) -> Result<Box<dyn AnalyticKernel>> {
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number '{s}' in kernel name '{name}'")))
    };
    let mut parts = name.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some("bands"), None, None) => Ok(Box::new(AntiDiagonalBands)),
        (Some("constant"), None, None) => Ok(Box::new(Uniform)),
        (Some("bilinear"), Some(a), None) => Ok(Box::new(Bilinear::new(parse(a)?)?)),
        (Some("unitype"), Some(k), None) => Ok(Box::new(PowerUnitype::new(parse(k)?)?)),
        (Some("blend"), Some(g), Some(inner)) => {
            let gamma = parse(g)?;
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::InvalidArgument("blend weight must lie in [0, 1]".into()));
            }
            Ok(Box::new(Blend { gamma, inner: catalog(inner)? }))
        }
        _ => Err(Error::InvalidArgument(format!("unknown analytic kernel '{name}'"))),
    }
}
