//! Kernel-based global sensitivity analysis.
//!
//! MMD and HSIC sensitivity indices with their subset decompositions, Sobol
//! indices as the linear-kernel special case, and kernel Shapley effects.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernel;
pub mod marginal;
pub mod quadrature;
pub mod rng;
pub mod shapley;
pub mod subset;
pub mod testbed;
pub mod value;

pub use error::{Error, Result};
pub use kernel::{eval_kernel, gram, mmd2, GramMatrix, KernelSpec, Statistic};
pub use marginal::MarginalDist;
pub use subset::{ClosedValueTable, IndexReport, Subset};
pub use value::{OutputValue, SampleSet};
