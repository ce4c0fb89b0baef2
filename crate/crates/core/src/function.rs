//! Piecewise-constant functions on an interval partition.
//!
//! Grid-sampled functions are the special case of a uniform partition whose
//! cell values are the midpoint samples, so integrals over them are midpoint
//! quadratures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::IntervalPartition;

/// Slack allowed when checking that opinions lie in `[-1, 1]`.
pub const OPINION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    partition: IntervalPartition,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(partition: IntervalPartition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::Shape(format!(
                "{} values for a partition with {} cells",
                values.len(),
                partition.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite function value".into()));
        }
        Ok(Self { partition, values })
    }

    pub fn constant(partition: IntervalPartition, c: f64) -> Self {
        let values = vec![c; partition.len()];
        Self { partition, values }
    }

    /// Samples `f` at the cell midpoints.
    pub fn sample(partition: IntervalPartition, f: impl Fn(f64) -> f64) -> Self {
        let values = partition.midpoints().into_iter().map(f).collect();
        Self { partition, values }
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn integral(&self) -> f64 {
        self.partition
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            partition: self.partition.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; both functions are first expressed on their common refinement.
    pub fn zip_with(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> Self {
        if self.partition.same_as(&other.partition) {
            return Self {
                partition: self.partition.clone(),
                values: self
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(&a, &b)| f(a, b))
                    .collect(),
            };
        }
        let common = self.partition.common_refinement(&other.partition);
        let a = self.refine_to(&common).expect("common refinement");
        let b = other.refine_to(&common).expect("common refinement");
        a.zip_with(&b, f)
    }

    /// Re-expresses the function on a refinement of its partition.
    pub fn refine_to(&self, finer: &IntervalPartition) -> Result<Self> {
        let parents = finer.parent_cells(&self.partition)?;
        Ok(Self {
            partition: finer.clone(),
            values: parents.into_iter().map(|k| self.values[k]).collect(),
        })
    }

    /// Cell means over `target` (exact for step functions).
    pub fn project(&self, target: &IntervalPartition) -> Self {
        let overlaps = target.overlaps(&self.partition);
        let values = overlaps
            .iter()
            .zip(target.weights())
            .map(|(row, w)| {
                row.iter()
                    .zip(&self.values)
                    .map(|(o, v)| o * v)
                    .sum::<f64>()
                    / w
            })
            .collect();
        Self {
            partition: target.clone(),
            values,
        }
    }

    /// `∫ self · other`.
    pub fn inner(&self, other: &StepFunction) -> f64 {
        self.zip_with(other, |a, b| a * b).integral()
    }

    /// `∫ |self − other|`.
    pub fn l1_distance(&self, other: &StepFunction) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs()).integral()
    }

    pub fn sup_distance(&self, other: &StepFunction) -> f64 {
        self.zip_with(other, |a, b| (a - b).abs()).max()
    }
}

/// A function of opinions with values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunction", into = "StepFunction")]
pub struct OpinionFunction(StepFunction);

impl TryFrom<StepFunction> for OpinionFunction {
    type Error = Error;
    fn try_from(f: StepFunction) -> Result<Self> {
        OpinionFunction::from_step(f)
    }
}

impl From<OpinionFunction> for StepFunction {
    fn from(f: OpinionFunction) -> Self {
        f.0
    }
}

impl OpinionFunction {
    pub fn new(partition: IntervalPartition, values: Vec<f64>) -> Result<Self> {
        Self::from_step(StepFunction::new(partition, values)?)
    }

    /// Accepts values within [`OPINION_SLACK`] of `[-1, 1]` and clamps them.
    pub fn from_step(f: StepFunction) -> Result<Self> {
        if f.values.iter().any(|v| v.abs() > 1.0 + OPINION_SLACK) {
            return Err(Error::Domain("opinion values must lie in [-1, 1]".into()));
        }
        Ok(Self(f.map(|v| v.clamp(-1.0, 1.0))))
    }

    pub fn constant(partition: IntervalPartition, c: f64) -> Result<Self> {
        Self::from_step(StepFunction::constant(partition, c))
    }

    pub fn sample(partition: IntervalPartition, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_step(StepFunction::sample(partition, f))
    }

    pub fn as_step(&self) -> &StepFunction {
        &self.0
    }

    pub fn partition(&self) -> &IntervalPartition {
        self.0.partition()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn integral(&self) -> f64 {
        self.0.integral()
    }

    pub fn refine_to(&self, finer: &IntervalPartition) -> Result<Self> {
        Ok(Self(self.0.refine_to(finer)?))
    }

    pub fn project(&self, target: &IntervalPartition) -> Self {
        Self(self.0.project(target))
    }
}
