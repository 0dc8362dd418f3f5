//! Synthetic three-level classification model with dependent inputs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{InputSampler, ModelFn};
use crate::marginal::MarginalDist;
use crate::value::OutputValue;

pub const DIM: usize = 4;
pub const NUM_LEVELS: u32 = 3;

/// Inputs are Uniform(0, 1) marginals tied by a Gaussian copula with a
/// common correlation. The level thresholds a latent linear score of the
/// normal scores `z_l = Phi^{-1}(x_l)`; the dominant input carries the
/// largest coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalSynthetic {
    pub dominant: usize,
    pub correlation: f64,
    pub coefficients: [f64; DIM],
    pub threshold: f64,
}

impl CategoricalSynthetic {
    /// Coefficient 2 on `dominant`, then 0.6, 0.4 and 0 on the remaining
    /// inputs in index order.
    pub fn new(dominant: usize) -> Result<Self> {
        if dominant >= DIM {
            return Err(Error::invalid(format!("dominant input {dominant} out of range")));
        }
        let mut coefficients = [0.0; DIM];
        coefficients[dominant] = 2.0;
        let rest = [0.6, 0.4, 0.0];
        for (k, l) in (0..DIM).filter(|l| *l != dominant).enumerate() {
            coefficients[l] = rest[k];
        }
        Ok(CategoricalSynthetic {
            dominant,
            correlation: 0.3,
            coefficients,
            threshold: 1.0,
        })
    }

    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        (0..DIM)
            .map(|i| (0..DIM).map(|j| if i == j { 1.0 } else { self.correlation }).collect())
            .collect()
    }

    pub fn sampler(&self) -> Result<InputSampler> {
        InputSampler::gaussian_copula(self.correlation_matrix(), vec![MarginalDist::Uniform { a: 0.0, b: 1.0 }; DIM])
    }

    pub fn level(&self, x: &[f64]) -> Result<u32> {
        if x.len() != DIM {
            return Err(Error::invalid(format!("categorical model takes 4 inputs, got {}", x.len())));
        }
        let n = Normal::new(0.0, 1.0).expect("standard normal");
        let mut score = 0.0;
        for (v, c) in x.iter().zip(&self.coefficients) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::Domain {
                    value: *v,
                    domain: "[0, 1]",
                });
            }
            score += c * n.inverse_cdf(v.clamp(1e-15, 1.0 - 1e-15));
        }
        Ok(if score < -self.threshold {
            0
        } else if score <= self.threshold {
            1
        } else {
            2
        })
    }

    pub fn model(&self) -> ModelFn {
        let me = self.clone();
        ModelFn::deterministic(DIM, move |x| me.level(x).map(OutputValue::categorical))
    }
}
