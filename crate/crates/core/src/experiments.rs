//! Replicated runs of the reference experiments, shared by the command line
//! tool and the acceptance tests.
//!
//! Replicate `r` of a run with seed `s` uses the child seed
//! `child_seed(s, r)` for every random draw, so replicates can run in any
//! order or in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    double_loop_mmd, knn_closed_value_gram, pick_freeze_mmd_report, pick_freeze_outputs, rank_mmd_gram,
    saltelli_report, EstimatorConfig, HsicFlavor, HsicGrams, InputKernel, InputSampler, ModelFn,
};
use crate::kernel::{gram, median_heuristic, GramMatrix, KernelSpec, Metric};
use crate::marginal::MarginalDist;
use crate::rng::{child_seed, substream, Op};
use crate::shapley::{hsic_shapley_grams, mmd_shapley, MmdShapleyEstimator, ShapleyData, ShapleyReport};
use crate::subset::{IndexReport, Subset};
use crate::testbed::{categorical::CategoricalSynthetic, ishigami, sir, stochastic};
use crate::value::{OutputValue, SampleSet};

/// Location and spread of replicated values. Quartiles interpolate
/// linearly between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::invalid("nothing to summarize"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        mean,
        std,
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

/// Summary of each column of per-replicate vectors.
pub fn summarize_columns(rows: &[Vec<f64>]) -> Result<Vec<Summary>> {
    let d = rows.first().map(Vec::len).unwrap_or(0);
    (0..d)
        .map(|l| summarize(&rows.iter().map(|r| r[l]).collect::<Vec<_>>()))
        .collect()
}

/// Runs `f(replicate)` for every replicate, in parallel.
pub fn replicate<T: Send>(reps: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |b, (l, v)| if *v > values[b] { l } else { b })
}

/// Inputs ordered by decreasing value; ties keep index order.
pub fn ranking(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|a, b| values[*b].total_cmp(&values[*a]).then(a.cmp(b)));
    idx
}

/// Gaussian kernel whose bandwidth is the median pairwise distance.
pub fn gaussian_median(column: &[OutputValue]) -> Result<KernelSpec> {
    Ok(KernelSpec::gaussian(median_heuristic(column, &Metric::Euclidean)?))
}

fn sample_model(model: &ModelFn, sampler: &InputSampler, n: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = substream(seed, Op::Sample, 0, 0);
    let inputs = sampler.sample(n, &mut rng);
    let outputs = model.eval_rows(&inputs, seed, 0, 0)?;
    SampleSet::new(inputs, outputs)
}

/// Sobolev kernels (order 1) on the probability-integral transform of each
/// input.
pub fn sobolev_kernels(sampler: &InputSampler) -> Vec<InputKernel> {
    sampler
        .marginals()
        .iter()
        .map(|m| InputKernel::sobolev(1, m.clone()))
        .collect()
}

/// First-order HSIC indices `HSIC(X_l, Y) / HSIC(X, Y)`.
pub fn hsic_first_order(grams: &HsicGrams, flavor: HsicFlavor) -> Result<Vec<f64>> {
    let d = grams.dim();
    let total = grams.closed(Subset::full(d), flavor)?;
    if !(total > 0.0) {
        return Err(Error::DegenerateOutput(format!("HSIC(X, Y) = {total}")));
    }
    (0..d)
        .map(|l| Ok(grams.closed(Subset::singleton(l), flavor)? / total))
        .collect()
}

/// First-order MMD indices from a given sample with the rank estimator.
pub fn rank_first_order(sample: &SampleSet, output_gram: &GramMatrix) -> Result<Vec<f64>> {
    let total = output_gram.total_mmd();
    if !(total > 0.0) {
        return Err(Error::DegenerateOutput(format!("total MMD² is {total}")));
    }
    (0..sample.dim())
        .map(|l| Ok(rank_mmd_gram(output_gram, &sample.column(l))? / total))
        .collect()
}

/// One Ishigami replicate: Sobol and Gaussian-kernel MMD indices from a
/// shared pick-freeze design, and first-order HSIC indices on its first
/// block.
#[derive(Debug, Clone, Serialize)]
pub struct IshigamiRun {
    pub sobol: IndexReport,
    pub mmd: IndexReport,
    pub hsic_first: Vec<f64>,
    pub sigma: f64,
    pub evaluations: u64,
}

pub fn ishigami_run(n: usize, seed: u64, rep: u64) -> Result<IshigamiRun> {
    let model = ishigami::model(true);
    let sampler = ishigami::sampler(true);
    let s = child_seed(seed, rep);
    let out = pick_freeze_outputs(&model, &sampler, n, s)?;
    let sobol = saltelli_report(&out)?;
    let spec = gaussian_median(&out.y)?;
    let mmd = pick_freeze_mmd_report(&out, &spec)?;
    let sample = SampleSet::new(out.x.clone(), out.y.clone())?;
    let grams = HsicGrams::new(&sample, &sobolev_kernels(&sampler), gram(&spec, &out.y)?)?;
    let sigma = match spec {
        KernelSpec::Gaussian { sigma } => sigma,
        _ => unreachable!(),
    };
    Ok(IshigamiRun {
        sobol,
        mmd,
        hsic_first: hsic_first_order(&grams, HsicFlavor::V)?,
        sigma,
        evaluations: model.evaluations(),
    })
}

/// First-order MMD indices of the Ishigami inputs from three estimators
/// sharing one Gaussian kernel.
#[derive(Debug, Clone, Serialize)]
pub struct CrossAgreementRun {
    pub rank: Vec<f64>,
    pub knn: Vec<f64>,
    pub double_loop: Vec<f64>,
}

/// `n` given points for the rank and kNN estimators (`n_a` anchors); the
/// double loop uses `n_dl` outer and inner points. All three divide by the
/// total MMD² of the given sample.
pub fn cross_agreement_run(n: usize, n_a: usize, n_dl: usize, seed: u64, rep: u64) -> Result<CrossAgreementRun> {
    let model = ishigami::model(false);
    let sampler = ishigami::sampler(false);
    let s = child_seed(seed, rep);
    let sample = sample_model(&model, &sampler, n, s)?;
    let spec = gaussian_median(&sample.outputs)?;
    let g = gram(&spec, &sample.outputs)?;
    let rank = rank_first_order(&sample, &g)?;
    let mut cfg = EstimatorConfig::new(n, s);
    cfg.n_a = n_a;
    let total = g.total_mmd();
    let knn = (0..sample.dim())
        .map(|l| Ok(knn_closed_value_gram(&g, &sample.inputs, Subset::singleton(l), &cfg)? / total))
        .collect::<Result<Vec<_>>>()?;

    let mut dl = EstimatorConfig::new(n_dl, s);
    dl.m = n_dl;
    let double_loop = (0..sample.dim())
        .map(|l| Ok(double_loop_mmd(&model, &sampler, Subset::singleton(l), &spec, &dl)? / total))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossAgreementRun {
        rank,
        knn,
        double_loop,
    })
}

/// Sobol indices of the inner mean of the stochastic simulator.
pub fn stochastic_sobol_run(n: usize, inner_sample: usize, seed: u64, rep: u64) -> Result<IndexReport> {
    let model = stochastic::mean_model(inner_sample);
    let out = pick_freeze_outputs(&model, &stochastic::sampler(), n, child_seed(seed, rep))?;
    saltelli_report(&out)
}

/// Size of the preliminary sample that fixes the output kernels.
pub const PRELIMINARY_SAMPLE: usize = 20;

/// Distribution-embedding kernel for bags of simulator draws: the inner
/// Gaussian bandwidth is the median distance of the pooled draws and
/// `lambda` the inverse median squared MMD between bags, both taken from a
/// preliminary sample drawn with `seed`.
pub fn stochastic_output_kernel(inner_sample: usize, seed: u64) -> Result<KernelSpec> {
    let model = stochastic::model(inner_sample);
    let mut rng = substream(seed, Op::Experiment, 1, 0);
    let rows = stochastic::sampler().sample(PRELIMINARY_SAMPLE, &mut rng);
    let bags = model.eval_rows(&rows, seed, u32::MAX, 0)?;
    let pooled: Vec<OutputValue> = bags
        .iter()
        .flat_map(|b| match b {
            OutputValue::DistSample { values } => values.iter().map(|v| OutputValue::scalar(*v)).collect(),
            _ => Vec::new(),
        })
        .collect();
    let inner = gaussian_median(&pooled)?;
    let med = median_heuristic(&bags, &Metric::Mmd(inner.clone()))?;
    Ok(KernelSpec::DistributionEmbedding {
        sigma2: 1.0,
        lambda: 1.0 / med,
        inner: Box::new(inner),
    })
}

/// First-order MMD (rank estimator) and HSIC (V-statistic) indices.
#[derive(Debug, Clone, Serialize)]
pub struct KernelFirstOrder {
    pub mmd: Vec<f64>,
    pub hsic: Vec<f64>,
}

pub fn stochastic_kernel_run(
    n: usize,
    inner_sample: usize,
    spec: &KernelSpec,
    seed: u64,
    rep: u64,
) -> Result<KernelFirstOrder> {
    let model = stochastic::model(inner_sample);
    let sampler = stochastic::sampler();
    let sample = sample_model(&model, &sampler, n, child_seed(seed, rep))?;
    let g = gram(spec, &sample.outputs)?;
    let mmd = rank_first_order(&sample, &g)?;
    let grams = HsicGrams::new(&sample, &sobolev_kernels(&sampler), g)?;
    Ok(KernelFirstOrder {
        mmd,
        hsic: hsic_first_order(&grams, HsicFlavor::V)?,
    })
}

/// Alignment kernels for the `I` and `R` curves, with the inner bandwidth
/// the median distance between pooled curve values of a preliminary sample.
pub fn sir_output_kernels(cfg: &sir::SirConfig, seed: u64) -> Result<[KernelSpec; 2]> {
    let mut rng = substream(seed, Op::Experiment, 2, 0);
    let rows = sir::sampler().sample(PRELIMINARY_SAMPLE, &mut rng);
    let curves = rows
        .iter()
        .map(|x| sir::sir_curves(x, cfg))
        .collect::<Result<Vec<_>>>()?;
    let pooled = |pick: fn(&(OutputValue, OutputValue)) -> &OutputValue| -> Vec<OutputValue> {
        curves
            .iter()
            .flat_map(|c| match pick(c) {
                OutputValue::Curve { values, .. } => values.iter().map(|v| OutputValue::scalar(*v)).collect(),
                _ => Vec::new(),
            })
            .collect()
    };
    let bw = |column: Vec<OutputValue>| -> Result<KernelSpec> {
        Ok(KernelSpec::GlobalAlignment {
            inner_bandwidth: median_heuristic(&column, &Metric::Euclidean)?,
            triangular_band: None,
        })
    };
    Ok([bw(pooled(|c| &c.0))?, bw(pooled(|c| &c.1))?])
}

/// First-order HSIC indices for the `I` and `R` curves.
#[derive(Debug, Clone, Serialize)]
pub struct SirRun {
    pub hsic_i: Vec<f64>,
    pub hsic_r: Vec<f64>,
}

pub fn sir_run(n: usize, cfg: &sir::SirConfig, kernels: &[KernelSpec; 2], seed: u64, rep: u64) -> Result<SirRun> {
    let sampler = sir::sampler();
    let s = child_seed(seed, rep);
    let mut rng = substream(s, Op::Sample, 0, 0);
    let inputs = sampler.sample(n, &mut rng);
    let curves = inputs
        .par_iter()
        .map(|x| sir::sir_curves(x, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (i, r): (Vec<OutputValue>, Vec<OutputValue>) = curves.into_iter().unzip();
    let input_kernels = sobolev_kernels(&sampler);
    let first = |outputs: Vec<OutputValue>, spec: &KernelSpec| -> Result<Vec<f64>> {
        let g = gram(spec, &outputs)?;
        let sample = SampleSet::new(inputs.clone(), outputs)?;
        hsic_first_order(&HsicGrams::new(&sample, &input_kernels, g)?, HsicFlavor::V)
    };
    Ok(SirRun {
        hsic_i: first(i, &kernels[0])?,
        hsic_r: first(r, &kernels[1])?,
    })
}

/// MMD-Shapley (kNN, Dirac kernel) and HSIC-Shapley (V-statistic, Sobolev
/// inputs, Dirac output kernel) effects of the categorical model.
#[derive(Debug, Clone, Serialize)]
pub struct CategoricalRun {
    pub mmd: ShapleyReport,
    pub hsic: ShapleyReport,
}

pub fn categorical_run(m: &CategoricalSynthetic, n: usize, seed: u64, rep: u64) -> Result<CategoricalRun> {
    let sampler = m.sampler()?;
    let s = child_seed(seed, rep);
    let sample = sample_model(&m.model(), &sampler, n, s)?;
    let spec = KernelSpec::Dirac {
        num_levels: crate::testbed::categorical::NUM_LEVELS,
    };
    let g = gram(&spec, &sample.outputs)?;
    let cfg = EstimatorConfig::new(n, s);
    let mmd = mmd_shapley(
        ShapleyData::Sample {
            sample: &sample,
            gram: &g,
        },
        &spec,
        &cfg,
        MmdShapleyEstimator::Knn,
    )?;
    let kernels: Vec<InputKernel> = (0..sample.dim())
        .map(|_| InputKernel::sobolev(1, MarginalDist::Uniform { a: 0.0, b: 1.0 }))
        .collect();
    let grams = HsicGrams::new(&sample, &kernels, g)?;
    Ok(CategoricalRun {
        mmd,
        hsic: hsic_shapley_grams(&grams, HsicFlavor::V, &cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_known_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q1, 2.0);
        assert_eq!(s.q3, 4.0);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let s = summarize(&[1.0, 2.0]).unwrap();
        assert_eq!(s.median, 1.5);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn ranking_and_argmax() {
        assert_eq!(ranking(&[0.1, 0.5, 0.5, 0.2]), vec![1, 2, 3, 0]);
        assert_eq!(argmax(&[0.1, 0.5, 0.5, 0.2]), 1);
    }

    #[test]
    fn replicates_do_not_depend_on_order() {
        let a = replicate(4, |r| Ok(child_seed(9, r))).unwrap();
        let b: Vec<u64> = (0..4).map(|r| child_seed(9, r)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn small_ishigami_run_is_reproducible() {
        let a = ishigami_run(200, 3, 1).unwrap();
        let b = ishigami_run(200, 3, 1).unwrap();
        assert_eq!(a.sobol, b.sobol);
        assert_eq!(a.hsic_first, b.hsic_first);
        assert_eq!(a.evaluations, 6 * 200);
        assert_eq!(a.sobol.first_order.len(), 4);
    }

    #[test]
    fn sir_kernels_are_alignment_kernels() {
        let k = sir_output_kernels(&sir::SirConfig::default(), 1).unwrap();
        for spec in k {
            assert!(matches!(spec, KernelSpec::GlobalAlignment { inner_bandwidth, .. } if inner_bandwidth > 0.0));
        }
    }
}
