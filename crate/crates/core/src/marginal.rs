use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::quadrature;

/// Law of a single input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalDist {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sd: f64 },
    /// Equally weighted atoms, kept sorted.
    Empirical { values: Vec<f64> },
}

impl MarginalDist {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let m = MarginalDist::Uniform { a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn normal(mu: f64, sd: f64) -> Result<Self> {
        let m = MarginalDist::Normal { mu, sd };
        m.validate()?;
        Ok(m)
    }

    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("empirical marginal has non-finite values"));
        }
        values.sort_by(f64::total_cmp);
        let m = MarginalDist::Empirical { values };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MarginalDist::Uniform { a, b } if !(a < b) || !a.is_finite() || !b.is_finite() => {
                Err(Error::invalid(format!("uniform marginal needs a < b, got [{a}, {b}]")))
            }
            MarginalDist::Normal { sd, mu } if !(*sd > 0.0) || !mu.is_finite() => {
                Err(Error::invalid(format!("normal marginal needs sd > 0, got {sd}")))
            }
            MarginalDist::Empirical { values } if values.is_empty() => {
                Err(Error::invalid("empirical marginal is empty"))
            }
            _ => Ok(()),
        }
    }

    fn std_normal() -> Normal {
        Normal::new(0.0, 1.0).expect("standard normal")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            MarginalDist::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            MarginalDist::Normal { mu, sd } => Self::std_normal().cdf((x - mu) / sd),
            MarginalDist::Empirical { values } => {
                // mid-rank so that the transform lands strictly inside (0, 1)
                let below = values.partition_point(|v| *v < x);
                let upto = values.partition_point(|v| *v <= x);
                (below + upto) as f64 / (2.0 * values.len() as f64)
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            MarginalDist::Uniform { a, b } => a + u * (b - a),
            MarginalDist::Normal { mu, sd } => {
                let u = u.clamp(1e-16, 1.0 - 1e-16);
                mu + sd * Self::std_normal().inverse_cdf(u)
            }
            MarginalDist::Empirical { values } => {
                let n = values.len();
                values[((u * n as f64) as usize).min(n - 1)]
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarginalDist::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            MarginalDist::Normal { mu, sd } => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                mu + sd * z
            }
            MarginalDist::Empirical { values } => values[rng.random_range(0..values.len())],
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            MarginalDist::Uniform { a, b } => 0.5 * (a + b),
            MarginalDist::Normal { mu, .. } => *mu,
            MarginalDist::Empirical { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    pub fn std_dev(&self) -> f64 {
        match self {
            MarginalDist::Uniform { a, b } => (b - a) / 12f64.sqrt(),
            MarginalDist::Normal { sd, .. } => *sd,
            MarginalDist::Empirical { values } => {
                let m = self.mean();
                (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
            }
        }
    }

    /// Integration rule against this law: nodes and probability weights
    /// summing to one. 64-node Gauss–Legendre on a uniform support,
    /// 64-node Gauss–Hermite for a normal, the atoms themselves otherwise.
    pub fn integration_rule(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            MarginalDist::Uniform { a, b } => {
                let r = quadrature::legendre64();
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let nodes = r.nodes.iter().map(|t| mid + half * t).collect();
                let weights = r.weights.iter().map(|w| 0.5 * w).collect();
                (nodes, weights)
            }
            MarginalDist::Normal { mu, sd } => {
                let r = quadrature::hermite64();
                let norm = std::f64::consts::PI.sqrt();
                let nodes = r
                    .nodes
                    .iter()
                    .map(|t| mu + std::f64::consts::SQRT_2 * sd * t)
                    .collect();
                let weights = r.weights.iter().map(|w| w / norm).collect();
                (nodes, weights)
            }
            MarginalDist::Empirical { values } => {
                let w = 1.0 / values.len() as f64;
                (values.clone(), vec![w; values.len()])
            }
        }
    }

    /// A handful of points spread over the bulk of the law, used as probes
    /// when checking the zero-mean property.
    pub fn probe_points(&self) -> Vec<f64> {
        [0.02, 0.2, 0.5, 0.8, 0.98]
            .iter()
            .map(|u| self.quantile(*u))
            .collect()
    }
}
