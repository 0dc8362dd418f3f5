use rayon::prelude::*;

use super::{EstimatorConfig, InputSampler, ModelFn};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, PreparedKernel, Statistic};
use crate::rng::{substream, Op};
use crate::subset::Subset;

/// Double-loop estimate of `E_{X_A} MMD²(P_Y, P_{Y|X_A})`.
///
/// One marginal output sample of size `m` is shared by all `n` outer points;
/// each outer point draws `x_A` from the input law and `m` conditional
/// inputs, so a call consumes `(n + 1) m` model evaluations.
pub fn double_loop_mmd(
    model: &ModelFn,
    sampler: &InputSampler,
    a: Subset,
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    cfg.validate()?;
    let d = sampler.dim();
    if model.dim() != d {
        return Err(Error::invalid(format!(
            "model arity {} differs from sampler dimension {d}",
            model.dim()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    if a.bits() >= (1u32 << d) {
        return Err(Error::invalid(format!("subset {a} exceeds dimension {d}")));
    }
    let k = PreparedKernel::new(spec)?;
    let conditional = sampler.conditional(a)?;
    let seed = cfg.stream_seed();
    let (n, m) = (cfg.n, cfg.m);
    let idx = a.indices();

    let mut rng = substream(seed, Op::DoubleLoop, a.bits(), 0);
    let rows = sampler.sample(m, &mut rng);
    let marginal = model.eval_rows(&rows, seed, a.bits(), 0)?;
    let cm = k.caches(&marginal)?;
    let within_marginal = k.within_mean(&marginal, &cm, Statistic::V)?;

    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, Op::DoubleLoop, a.bits(), i as u64 + 1);
            let x = sampler.sample_one(&mut rng);
            let xa: Vec<f64> = idx.iter().map(|l| x[*l]).collect();
            let rows = conditional.sample(&xa, m, &mut rng)?;
            let ys = model.eval_rows(&rows, seed, a.bits(), ((i + 1) * m) as u64)?;
            let cs = k.caches(&ys)?;
            let within = k.within_mean(&ys, &cs, Statistic::V)?;
            let cross = k.cross_mean(&marginal, &cm, &ys, &cs)?;
            Ok(within_marginal + within - 2.0 * cross)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::MarginalDist;

    fn unif(d: usize) -> InputSampler {
        InputSampler::independent(vec![MarginalDist::uniform(0.0, 1.0).unwrap(); d])
    }

    #[test]
    fn constant_model_gives_zero_and_counts_evaluations() {
        let model = ModelFn::scalar(2, |_| Ok(3.0));
        let mut cfg = EstimatorConfig::new(20, 4);
        cfg.m = 15;
        let v = double_loop_mmd(&model, &unif(2), Subset::singleton(0), &KernelSpec::gaussian(1.0), &cfg).unwrap();
        assert!(v.abs() < 1e-12);
        assert_eq!(model.evaluations(), (20 + 1) * 15);
    }

    #[test]
    fn empty_subset_is_zero_without_evaluations() {
        let model = ModelFn::scalar(1, |x| Ok(x[0]));
        let v = double_loop_mmd(&model, &unif(1), Subset::EMPTY, &KernelSpec::Linear, &EstimatorConfig::new(10, 1))
            .unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(model.evaluations(), 0);
    }

    #[test]
    fn linear_kernel_recovers_the_variance_of_x1() {
        let model = ModelFn::scalar(2, |x| Ok(x[0]));
        let cfg = EstimatorConfig::new(2000, 11);
        let v = double_loop_mmd(&model, &unif(2), Subset::singleton(0), &KernelSpec::Linear, &cfg).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn reproducible_for_a_fixed_seed() {
        let model = ModelFn::scalar(2, |x| Ok(x[0] * x[1]));
        let mut cfg = EstimatorConfig::new(30, 9);
        cfg.m = 30;
        let s = KernelSpec::gaussian(0.5);
        let a = double_loop_mmd(&model, &unif(2), Subset::singleton(1), &s, &cfg).unwrap();
        let b = double_loop_mmd(&model, &unif(2), Subset::singleton(1), &s, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
