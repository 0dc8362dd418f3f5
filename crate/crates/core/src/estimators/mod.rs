//! Sampling-based estimators of closed subset values.

mod double_loop;
mod hsic;
mod knn;
mod model;
mod pick_freeze;
mod rank;
mod sampler;

pub use double_loop::double_loop_mmd;
pub use hsic::{hsic_stat, verify_input_kernels, HsicFlavor, HsicGrams, InputKernel, MAX_TABLE_DIM, ZERO_MEAN_TOL};
pub use knn::{knn_closed_value, knn_closed_value_gram, knn_complementary_value, knn_complementary_value_gram};
pub use model::ModelFn;
pub use pick_freeze::{
    pick_freeze_design, pick_freeze_mmd, pick_freeze_mmd_report, pick_freeze_outputs, saltelli_report, saltelli_sobol,
    PickFreezeDesign, PickFreezeOutputs,
};
pub use rank::{rank_mmd, rank_mmd_gram, rank_permutation};
pub use sampler::{Conditional, GaussianCopula, InputSampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::child_seed;

/// Sample sizes and seed shared by the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Outer sample size.
    pub n: usize,
    /// Inner sample size of the double loop.
    pub m: usize,
    /// Number of kNN anchor points.
    pub n_a: usize,
    /// Neighbour count of the complementary kNN estimator.
    pub n_i: usize,
    pub seed: u64,
    #[serde(default)]
    pub replicate: u64,
}

impl EstimatorConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        EstimatorConfig {
            n,
            m: n,
            n_a: n.min(500),
            n_i: 10,
            seed,
            replicate: 0,
        }
    }

    pub fn with_replicate(mut self, replicate: u64) -> Self {
        self.replicate = replicate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.n_a == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.n_i < 2 {
            return Err(Error::invalid("n_i must be at least 2"));
        }
        if self.n_a > self.n {
            return Err(Error::invalid(format!("n_a = {} exceeds n = {}", self.n_a, self.n)));
        }
        Ok(())
    }

    /// Seed of this replicate, from which all substreams are keyed.
    pub fn stream_seed(&self) -> u64 {
        child_seed(self.seed, self.replicate)
    }
}

/// Standardize input columns `cols` to zero mean and unit variance.
/// Constant columns are only centered.
pub(crate) fn standardized(inputs: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    let n = inputs.len() as f64;
    let stats: Vec<(f64, f64)> = cols
        .iter()
        .map(|&l| {
            let mean = inputs.iter().map(|r| r[l]).sum::<f64>() / n;
            let var = inputs.iter().map(|r| (r[l] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect();
    inputs
        .iter()
        .map(|r| cols.iter().zip(&stats).map(|(&l, (m, s))| (r[l] - m) / s).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = EstimatorConfig::new(2000, 1);
        assert_eq!((c.n_a, c.n_i, c.m), (500, 10, 2000));
        assert!(c.validate().is_ok());
        let mut bad = c.clone();
        bad.n_i = 1;
        assert!(bad.validate().is_err());
        let mut bad = c;
        bad.n_a = 3000;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn standardization() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let z = standardized(&rows, &[0, 1]);
        assert_eq!(z, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
    }
}
