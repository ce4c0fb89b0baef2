//! Serializable game descriptions as read from files.

use serde::{Deserialize, Serialize};

use super::{GameSpec, Operator, Player, Strategy};
use crate::error::{Error, Result};
use crate::function::{OpinionFunction, StepFunction};
use crate::kernel::analytic::catalog;
use crate::kernel::Kernel;
use crate::partition::IntervalPartition;
use crate::transform::discretize_analytic;

/// A kernel given explicitly or by catalog name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelInput {
    Catalog { catalog: String },
    Explicit(Kernel),
}

/// A constant or per-cell values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionInput {
    Constant(f64),
    Values(Vec<f64>),
}

impl FunctionInput {
    /// Values on `carrier`; arrays may be given on the carrier or on the
    /// kernel partition it refines.
    pub fn resolve(&self, carrier: &IntervalPartition, kernel_partition: &IntervalPartition, name: &str) -> Result<StepFunction> {
        match self {
            FunctionInput::Constant(c) => Ok(StepFunction::constant(carrier.clone(), *c)),
            FunctionInput::Values(v) if v.len() == carrier.len() => StepFunction::new(carrier.clone(), v.clone()),
            FunctionInput::Values(v) if v.len() == kernel_partition.len() => {
                StepFunction::new(kernel_partition.clone(), v.clone())?.refine_to(carrier)
            }
            FunctionInput::Values(v) => Err(Error::Shape(format!(
                "{name} has {} values; expected {} or {}",
                v.len(),
                carrier.len(),
                kernel_partition.len()
            ))),
        }
    }
}

fn unit() -> FunctionInput {
    FunctionInput::Constant(1.0)
}

fn default_operator() -> Operator {
    Operator::WeightedContest
}

/// File form of a game. `resolution` is the strategy grid size: catalog
/// kernels are block-averaged onto `uniform(resolution)`, explicit kernels are
/// refined onto their common refinement with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpecInput {
    pub kernel: KernelInput,
    #[serde(default = "default_operator")]
    pub operator: Operator,
    pub f0: FunctionInput,
    #[serde(default = "unit")]
    pub s0: FunctionInput,
    #[serde(default = "unit")]
    pub psi1: FunctionInput,
    #[serde(default = "unit")]
    pub psi2: FunctionInput,
    pub budgets: [f64; 2],
    pub delta: f64,
    #[serde(default)]
    pub resolution: Option<usize>,
}

/// Default strategy grid for catalog kernels.
pub const DEFAULT_RESOLUTION: usize = 64;

impl GameSpecInput {
    /// Builds the game; `resolution` overrides the file's value.
    pub fn build(&self, resolution: Option<usize>) -> Result<GameSpec> {
        let resolution = resolution.or(self.resolution);
        let kernel: Kernel = match &self.kernel {
            KernelInput::Catalog { catalog: name } => {
                let analytic = catalog(name)?;
                let grid = IntervalPartition::uniform(resolution.unwrap_or(DEFAULT_RESOLUTION))?;
                discretize_analytic(analytic.as_ref(), &grid).into()
            }
            KernelInput::Explicit(k) => k.clone(),
        };
        let kernel_partition = kernel.partition();
        let carrier = match resolution {
            Some(n) => kernel_partition.common_refinement(&IntervalPartition::uniform(n)?),
            None => kernel_partition.clone(),
        };
        let kernel: Kernel = if carrier.same_as(&kernel_partition) {
            kernel
        } else {
            kernel.to_block().refine_to(&carrier)?.into()
        };
        let f0 = OpinionFunction::from_step(self.f0.resolve(&carrier, &kernel_partition, "f0")?)?;
        GameSpec::new(
            kernel,
            self.operator,
            f0,
            self.s0.resolve(&carrier, &kernel_partition, "s0")?,
            self.psi1.resolve(&carrier, &kernel_partition, "psi1")?,
            self.psi2.resolve(&carrier, &kernel_partition, "psi2")?,
            self.budgets,
            self.delta,
        )
    }
}

/// A strategy profile; extra fields (such as a solver report's) are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileInput {
    pub s1: FunctionInput,
    pub s2: FunctionInput,
}

impl ProfileInput {
    pub fn strategies(&self, spec: &GameSpec) -> Result<(Strategy, Strategy)> {
        let carrier = spec.partition();
        let s1 = self.s1.resolve(&carrier, &carrier, "s1")?;
        let s2 = self.s2.resolve(&carrier, &carrier, "s2")?;
        Ok((
            Strategy::new(s1, spec.budget(Player::One))?,
            Strategy::new(s2, spec.budget(Player::Two))?,
        ))
    }
}
