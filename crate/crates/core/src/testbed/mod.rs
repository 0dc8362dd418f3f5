//! Reference models and samplers.

pub mod categorical;
pub mod discrete;
pub mod ishigami;
pub mod sir;
pub mod stochastic;

pub use categorical::CategoricalSynthetic;
pub use discrete::{DiscreteEnumerable, Quantity};
pub use ishigami::ishigami;
pub use sir::{sir_simulate, SirConfig, SirParams};
pub use stochastic::stochastic_sim;

use crate::error::Result;
use crate::estimators::InputSampler;
use crate::marginal::MarginalDist;
use crate::rng::{substream, Op};

/// `n` rows from a Gaussian copula with the given marginals.
pub fn gaussian_copula_sample(
    corr: Vec<Vec<f64>>,
    marginals: Vec<MarginalDist>,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let s = InputSampler::gaussian_copula(corr, marginals)?;
    Ok(s.sample(n, &mut substream(seed, Op::Sample, 0, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
        let mut r = vec![0.0; v.len()];
        for (k, i) in idx.into_iter().enumerate() {
            r[i] = k as f64;
        }
        r
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let (ra, rb) = (ranks(a), ranks(b));
        let n = a.len() as f64;
        let m = (n - 1.0) / 2.0;
        let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - m) * (y - m)).sum();
        let var: f64 = ra.iter().map(|x| (x - m) * (x - m)).sum();
        cov / var
    }

    fn col(rows: &[Vec<f64>], l: usize) -> Vec<f64> {
        rows.iter().map(|r| r[l]).collect()
    }

    fn ks_uniform(v: &[f64]) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn copula_rank_correlation() {
        let u = vec![MarginalDist::uniform(0.0, 1.0).unwrap(); 2];
        let id = gaussian_copula_sample(vec![vec![1.0, 0.0], vec![0.0, 1.0]], u.clone(), 2000, 1).unwrap();
        assert!(spearman(&col(&id, 0), &col(&id, 1)).abs() < 0.05);
        let hi = gaussian_copula_sample(vec![vec![1.0, 0.99], vec![0.99, 1.0]], u, 2000, 2).unwrap();
        assert!(spearman(&col(&hi, 0), &col(&hi, 1)) > 0.9);
        for l in 0..2 {
            assert!(ks_uniform(&col(&hi, l)) < 0.04);
        }
    }

    #[test]
    fn copula_rejects_non_psd() {
        let u = vec![MarginalDist::uniform(0.0, 1.0).unwrap(); 3];
        let c = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        assert!(matches!(gaussian_copula_sample(c, u, 10, 1), Err(crate::Error::NotPsd(_))));
    }
}
