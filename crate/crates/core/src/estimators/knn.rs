use rand::Rng;
use rayon::prelude::*;

use super::{standardized, EstimatorConfig};
use crate::error::{Error, Result};
use crate::kernel::{GramMatrix, KernelSpec};
use crate::rng::{substream, Op};
use crate::subset::Subset;
use crate::value::SampleSet;

fn check(gram: &GramMatrix, inputs: &[Vec<f64>], a: Subset, cfg: &EstimatorConfig) -> Result<()> {
    if inputs.len() != gram.n {
        return Err(Error::invalid("input rows and Gram matrix sizes differ"));
    }
    if gram.n < 2 {
        return Err(Error::invalid("nearest neighbours need at least two points"));
    }
    let d = inputs[0].len();
    if u64::from(a.bits()) >= 1u64 << d {
        return Err(Error::invalid(format!("subset {a} exceeds dimension {d}")));
    }
    if cfg.n_a > gram.n {
        return Err(Error::invalid(format!("n_a = {} exceeds the sample size {}", cfg.n_a, gram.n)));
    }
    Ok(())
}

/// Anchor points: all points when `n_a = n`, otherwise `n_a` uniform draws
/// with replacement.
fn anchors(n: usize, op_subset: u32, cfg: &EstimatorConfig) -> Vec<usize> {
    if cfg.n_a == n {
        return (0..n).collect();
    }
    let mut rng = substream(cfg.stream_seed(), Op::KnnAnchors, op_subset, 0);
    (0..cfg.n_a).map(|_| rng.random_range(0..n)).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest point other than `i`; ties go to the smallest index.
fn nearest_other(z: &[Vec<f64>], i: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (j, row) in z.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = dist2(&z[i], row);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// `i` followed by its `k - 1` nearest other points, ordered by
/// (distance, index).
fn neighbourhood(z: &[Vec<f64>], i: usize, k: usize) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = z
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, row)| (dist2(&z[i], row), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let take = (k - 1).min(cand.len());
    if take < cand.len() {
        cand.select_nth_unstable_by(take, cmp);
        cand.truncate(take);
    }
    cand.sort_by(cmp);
    std::iter::once(i).chain(cand.into_iter().map(|(_, j)| j)).collect()
}

/// Nearest-neighbour estimate of `E MMD²(P_Y, P_{Y|X_A})`: the mean of
/// `k(y_s, y_{nn(s)})` over anchors `s` minus the mean of the Gram matrix.
/// Distances use the columns of `A` standardized to unit variance.
pub fn knn_closed_value_gram(gram: &GramMatrix, inputs: &[Vec<f64>], a: Subset, cfg: &EstimatorConfig) -> Result<f64> {
    check(gram, inputs, a, cfg)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let z = standardized(inputs, &a.indices());
    let s = anchors(gram.n, a.bits(), cfg);
    let paired: f64 = s
        .par_iter()
        .map(|&i| gram.get(i, nearest_other(&z, i)))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(paired / s.len() as f64 - gram.mean())
}

pub fn knn_closed_value(sample: &SampleSet, a: Subset, spec: &KernelSpec, cfg: &EstimatorConfig) -> Result<f64> {
    let g = crate::kernel::gram(spec, &sample.outputs)?;
    knn_closed_value_gram(&g, &sample.inputs, a, cfg)
}

/// Nearest-neighbour estimate of the complementary value
/// `E_{X_{-A}}[E k(Y, Y) - E k(Y, Y') | X_{-A}]`: for each anchor, the
/// `n_i` nearest points in the columns outside `A` (anchor included) are
/// treated as a conditional sample, scored with the unbiased off-diagonal
/// form `mean k(y_p, y_p) - mean_{p != q} k(y_p, y_q)`. With `A` the full
/// set every point is a neighbour and the value is the total MMD² (plug-in
/// form).
pub fn knn_complementary_value_gram(
    gram: &GramMatrix,
    inputs: &[Vec<f64>],
    a: Subset,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    check(gram, inputs, a, cfg)?;
    let d = inputs[0].len();
    let rest = a.complement(d);
    if rest.is_empty() {
        return Ok(gram.diag_mean() - gram.mean());
    }
    if cfg.n_i > gram.n {
        return Err(Error::invalid(format!("n_i = {} exceeds the sample size {}", cfg.n_i, gram.n)));
    }
    let z = standardized(inputs, &rest.indices());
    // offset keeps the anchor stream distinct from the closed estimator's
    let s = anchors(gram.n, a.bits() | 0x8000_0000, cfg);
    let k = cfg.n_i as f64;
    let local: Vec<f64> = s
        .par_iter()
        .map(|&i| {
            let nb = neighbourhood(&z, i, cfg.n_i);
            let mut diag = 0.0;
            let mut full = 0.0;
            for &p in &nb {
                diag += gram.get(p, p);
                for &q in &nb {
                    full += gram.get(p, q);
                }
            }
            diag / k - (full - diag) / (k * (k - 1.0))
        })
        .collect();
    Ok(local.iter().sum::<f64>() / s.len() as f64)
}

pub fn knn_complementary_value(
    sample: &SampleSet,
    a: Subset,
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    let g = crate::kernel::gram(spec, &sample.outputs)?;
    knn_complementary_value_gram(&g, &sample.inputs, a, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::OutputValue;

    #[test]
    fn second_neighbour_example() {
        let z = vec![vec![0.1], vec![0.5], vec![0.9]];
        assert_eq!(nearest_other(&z, 0), 1);
        // 0.5 is equidistant from both, smallest index wins
        assert_eq!(nearest_other(&z, 1), 0);
    }

    #[test]
    fn neighbourhood_starts_with_anchor() {
        let z = vec![vec![0.0], vec![0.0], vec![3.0], vec![1.0]];
        assert_eq!(neighbourhood(&z, 1, 3), vec![1, 0, 3]);
        assert_eq!(neighbourhood(&z, 2, 10), vec![2, 3, 0, 1]);
    }

    fn grid_sample(f: impl Fn(f64, f64) -> f64) -> SampleSet {
        let mut inputs = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                inputs.push(vec![(i as f64 + 0.5) / 40.0, (j as f64 + 0.5) / 40.0]);
            }
        }
        let outputs = inputs.iter().map(|r| OutputValue::scalar(f(r[0], r[1]))).collect();
        SampleSet::new(inputs, outputs).unwrap()
    }

    #[test]
    fn constant_output_is_zero() {
        let s = grid_sample(|_, _| 4.0);
        let cfg = EstimatorConfig::new(s.len(), 1);
        let spec = KernelSpec::gaussian(1.0);
        assert_eq!(knn_closed_value(&s, Subset::singleton(0), &spec, &cfg).unwrap(), 0.0);
        assert_eq!(knn_complementary_value(&s, Subset::singleton(1), &spec, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn full_set_complementary_is_total() {
        let s = grid_sample(|a, b| a + b);
        let spec = KernelSpec::Linear;
        let g = crate::kernel::gram(&spec, &s.outputs).unwrap();
        let cfg = EstimatorConfig::new(s.len(), 1);
        let v = knn_complementary_value_gram(&g, &s.inputs, Subset::full(2), &cfg).unwrap();
        assert_eq!(v, g.total_mmd());
    }

    #[test]
    fn linear_kernel_targets() {
        // Y = X1 + X2: Var E(Y|X1) = 1/12 and E Var(Y|X2) = 1/12.
        use crate::rng::{substream, Op};
        use rand::Rng;
        let mut rng = substream(5, Op::Sample, 0, 0);
        let inputs: Vec<Vec<f64>> = (0..4000).map(|_| vec![rng.random(), rng.random()]).collect();
        let outputs = inputs.iter().map(|r| OutputValue::scalar(r[0] + r[1])).collect();
        let s = SampleSet::new(inputs, outputs).unwrap();
        let spec = KernelSpec::Linear;
        let mut cfg = EstimatorConfig::new(s.len(), 3);
        // every point as an anchor: standard error about 0.008
        cfg.n_a = s.len();
        let c = knn_closed_value(&s, Subset::singleton(0), &spec, &cfg).unwrap();
        assert!((c - 1.0 / 12.0).abs() < 0.025, "{c}");
        cfg.n_i = 40;
        let e = knn_complementary_value(&s, Subset::singleton(0), &spec, &cfg).unwrap();
        assert!((e - 1.0 / 12.0).abs() < 0.01, "{e}");
    }
}
