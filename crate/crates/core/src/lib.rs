//! Continuous DeGroot opinion dynamics on DiKernels.
//!
//! Block-constant kernels carry finite DeGroot models exactly; grid and
//! analytic kernels cover the continuum case. On top of the dynamics sit the
//! cut-norm error bounds, consensus via the stationary density, and a
//! two-lobby influence game with water-filling best responses.

pub mod dynamics;
pub mod error;
pub mod function;
pub mod game;
pub mod kernel;
pub mod metrics;
pub mod partition;
pub mod transform;

pub use error::{Error, Result};
pub use function::{OpinionFunction, StepFunction};
pub use kernel::{BlockKernel, GridKernel, Kernel};
pub use partition::IntervalPartition;
pub use transform::WeightedDeGrootModel;
