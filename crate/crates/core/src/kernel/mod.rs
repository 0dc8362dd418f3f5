//! Kernel specifications, evaluation, Gram matrices and MMD.

pub mod alignment;
pub mod distribution;
pub mod scalar;
pub mod sobolev;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use alignment::global_alignment_kernel;
pub use distribution::{wasserstein2_sq, wasserstein2_sq_sorted};
pub use scalar::{durrande_zero_mean, stein_zero_mean, ScoreFn};
pub use sobolev::{bernoulli, sobolev_kernel};

use crate::error::{Error, Result};
use crate::marginal::MarginalDist;
use crate::rng::{substream, Op};
use crate::value::OutputValue;
use distribution::{bag_mmd2, canonical_first, cross_mean};
use scalar::ScalarKernel;

/// Declarative kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Gaussian {
        sigma: f64,
    },
    Dirac {
        num_levels: u32,
    },
    SobolevZeroMean {
        r: u32,
    },
    DurrandeZeroMean {
        base: Box<KernelSpec>,
        marginal: MarginalDist,
    },
    SteinZeroMean {
        base: Box<KernelSpec>,
        score: ScoreFn,
    },
    /// `sigma2 * exp(-lambda * MMD^2(P, Q))` with MMD taken under `inner`.
    DistributionEmbedding {
        sigma2: f64,
        lambda: f64,
        inner: Box<KernelSpec>,
    },
    /// `sigma2 * exp(-lambda * W2^2(P, Q))`.
    WassersteinEmbedding {
        sigma2: f64,
        lambda: f64,
    },
    GlobalAlignment {
        inner_bandwidth: f64,
        #[serde(default)]
        triangular_band: Option<usize>,
    },
    /// `prod_l (1 + k_l)` over zero-mean factor kernels, one per input.
    ProductZeroMean {
        factors: Vec<KernelSpec>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec::Gaussian { sigma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Gaussian { .. } => "gaussian",
            KernelSpec::Dirac { .. } => "dirac",
            KernelSpec::SobolevZeroMean { .. } => "sobolev",
            KernelSpec::DurrandeZeroMean { .. } => "durrande",
            KernelSpec::SteinZeroMean { .. } => "stein",
            KernelSpec::DistributionEmbedding { .. } => "distribution-embedding",
            KernelSpec::WassersteinEmbedding { .. } => "wasserstein-embedding",
            KernelSpec::GlobalAlignment { .. } => "global-alignment",
            KernelSpec::ProductZeroMean { .. } => "product-zero-mean",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { sigma } => positive("sigma", *sigma),
            KernelSpec::Dirac { num_levels } if *num_levels == 0 => {
                Err(Error::invalid("dirac kernel needs at least one level"))
            }
            KernelSpec::Dirac { .. } => Ok(()),
            KernelSpec::SobolevZeroMean { r } => sobolev::check_order(*r),
            KernelSpec::DurrandeZeroMean { base, marginal } => {
                base.validate()?;
                marginal.validate()
            }
            KernelSpec::SteinZeroMean { base, .. } => base.validate(),
            KernelSpec::DistributionEmbedding {
                sigma2,
                lambda,
                inner,
            } => {
                positive("sigma2", *sigma2)?;
                positive("lambda", *lambda)?;
                inner.validate()
            }
            KernelSpec::WassersteinEmbedding { sigma2, lambda } => {
                positive("sigma2", *sigma2)?;
                positive("lambda", *lambda)
            }
            KernelSpec::GlobalAlignment {
                inner_bandwidth, ..
            } => positive("inner_bandwidth", *inner_bandwidth),
            KernelSpec::ProductZeroMean { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("product kernel needs at least one factor"));
                }
                factors.iter().try_for_each(KernelSpec::validate)
            }
        }
    }
}

/// Plug-in (V) or off-diagonal (U) empirical average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Statistic {
    #[default]
    V,
    U,
}

#[derive(Debug, Clone)]
enum Imp {
    Scalar(ScalarKernel),
    Dirac(u32),
    Distribution {
        sigma2: f64,
        lambda: f64,
        inner: ScalarKernel,
    },
    Wasserstein {
        sigma2: f64,
        lambda: f64,
    },
    Alignment {
        bandwidth: f64,
        band: Option<usize>,
    },
}

/// Per-point quantities that a kernel reuses across a Gram row.
#[derive(Debug, Clone)]
pub enum PointCache {
    None,
    Scalar(f64),
    /// Sorted copy of a bag.
    Sorted(Vec<f64>),
}

/// A kernel with its parameters resolved (quadrature rules, constants).
#[derive(Debug, Clone)]
pub struct PreparedKernel {
    name: &'static str,
    imp: Imp,
}

fn mismatch(name: &'static str, a: &OutputValue, b: &OutputValue) -> Error {
    Error::KindMismatch {
        kernel: name,
        left: a.kind_name(),
        right: b.kind_name(),
    }
}

fn scalar_slice(column: &[OutputValue]) -> Option<Vec<f64>> {
    column.iter().map(OutputValue::as_scalar).collect()
}

fn level_counts(column: &[OutputValue], levels: u32) -> Option<Vec<f64>> {
    let mut counts = vec![0.0; levels as usize];
    for v in column {
        match v {
            OutputValue::Categorical { level } if *level < levels => counts[*level as usize] += 1.0,
            _ => return None,
        }
    }
    Some(counts)
}

fn curve_values(v: &OutputValue) -> Option<&[f64]> {
    match v {
        OutputValue::Curve { values, .. } => Some(values),
        _ => None,
    }
}

impl PreparedKernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        let imp = match spec {
            KernelSpec::Dirac { num_levels } => Imp::Dirac(*num_levels),
            KernelSpec::DistributionEmbedding {
                sigma2,
                lambda,
                inner,
            } => Imp::Distribution {
                sigma2: *sigma2,
                lambda: *lambda,
                inner: ScalarKernel::new(inner)?,
            },
            KernelSpec::WassersteinEmbedding { sigma2, lambda } => Imp::Wasserstein {
                sigma2: *sigma2,
                lambda: *lambda,
            },
            KernelSpec::GlobalAlignment {
                inner_bandwidth,
                triangular_band,
            } => Imp::Alignment {
                bandwidth: *inner_bandwidth,
                band: *triangular_band,
            },
            KernelSpec::ProductZeroMean { .. } => {
                return Err(Error::Unsupported(
                    "the product kernel acts on input vectors; use product_kernel".into(),
                ))
            }
            other => Imp::Scalar(ScalarKernel::new(other)?),
        };
        Ok(PreparedKernel {
            name: spec.name(),
            imp,
        })
    }

    /// Validate one value for this kernel and compute its cache.
    pub fn cache(&self, v: &OutputValue) -> Result<PointCache> {
        let wrong = || mismatch(self.name, v, v);
        match (&self.imp, v) {
            (Imp::Scalar(k), OutputValue::Scalar { value }) => {
                k.check(*value)?;
                Ok(PointCache::Scalar(k.point_cache(*value)))
            }
            (
                Imp::Scalar(ScalarKernel::Linear | ScalarKernel::Gaussian { .. }),
                OutputValue::Curve { .. },
            ) => Ok(PointCache::None),
            (Imp::Dirac(levels), OutputValue::Categorical { level }) => {
                if level < levels {
                    Ok(PointCache::None)
                } else {
                    Err(Error::invalid(format!(
                        "categorical level {level} outside 0..{levels}"
                    )))
                }
            }
            (Imp::Distribution { inner, .. }, OutputValue::DistSample { values }) => {
                for x in values {
                    inner.check(*x)?;
                }
                Ok(PointCache::Scalar(cross_mean(inner, values, values)))
            }
            (Imp::Wasserstein { .. }, OutputValue::DistSample { values }) => {
                let mut s = values.clone();
                s.sort_by(f64::total_cmp);
                Ok(PointCache::Sorted(s))
            }
            (Imp::Alignment { bandwidth, band }, OutputValue::Curve { values, .. }) => Ok(
                PointCache::Scalar(alignment::log_alignment(values, values, *bandwidth, *band)?),
            ),
            _ => Err(wrong()),
        }
    }

    /// Kernel value from two values and their caches. Exactly symmetric.
    pub fn eval_cached(
        &self,
        a: &OutputValue,
        ca: &PointCache,
        b: &OutputValue,
        cb: &PointCache,
    ) -> Result<f64> {
        match (&self.imp, a, b) {
            (Imp::Scalar(k), OutputValue::Scalar { value: x }, OutputValue::Scalar { value: y }) => {
                let (PointCache::Scalar(cx), PointCache::Scalar(cy)) = (ca, cb) else {
                    unreachable!("scalar caches")
                };
                Ok(k.value_cached(*x, *cx, *y, *cy))
            }
            (Imp::Scalar(k), OutputValue::Curve { values: x, .. }, OutputValue::Curve { values: y, .. }) => {
                if x.len() != y.len() {
                    return Err(Error::invalid(format!(
                        "{} kernel on curves of lengths {} and {}",
                        self.name,
                        x.len(),
                        y.len()
                    )));
                }
                match k {
                    ScalarKernel::Linear => Ok(x.iter().zip(y).map(|(p, q)| p * q).sum()),
                    ScalarKernel::Gaussian { inv_two_sigma2, .. } => {
                        let d2: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
                        Ok((-d2 * inv_two_sigma2).exp())
                    }
                    _ => Err(mismatch(self.name, a, b)),
                }
            }
            (Imp::Dirac(_), OutputValue::Categorical { level: p }, OutputValue::Categorical { level: q }) => {
                Ok(if p == q { 1.0 } else { 0.0 })
            }
            (
                Imp::Distribution {
                    sigma2,
                    lambda,
                    inner,
                },
                OutputValue::DistSample { values: x },
                OutputValue::DistSample { values: y },
            ) => {
                let (PointCache::Scalar(sx), PointCache::Scalar(sy)) = (ca, cb) else {
                    unreachable!("distribution caches")
                };
                let m = bag_mmd2(inner, x, *sx, y, *sy);
                Ok(sigma2 * (-lambda * m).exp())
            }
            (
                Imp::Wasserstein { sigma2, lambda },
                OutputValue::DistSample { .. },
                OutputValue::DistSample { .. },
            ) => {
                let (PointCache::Sorted(x), PointCache::Sorted(y)) = (ca, cb) else {
                    unreachable!("sorted caches")
                };
                Ok(sigma2 * (-lambda * wasserstein2_sq_sorted(x, y)).exp())
            }
            (Imp::Alignment { bandwidth, band }, OutputValue::Curve { .. }, OutputValue::Curve { .. }) => {
                let (PointCache::Scalar(la), PointCache::Scalar(lb)) = (ca, cb) else {
                    unreachable!("alignment caches")
                };
                let (x, y) = (curve_values(a).unwrap(), curve_values(b).unwrap());
                let lab = if canonical_first(x, y) {
                    alignment::log_alignment(x, y, *bandwidth, *band)?
                } else {
                    alignment::log_alignment(y, x, *bandwidth, *band)?
                };
                Ok(alignment::normalize(lab, *la, *lb))
            }
            _ => Err(mismatch(self.name, a, b)),
        }
    }

    pub fn eval(&self, a: &OutputValue, b: &OutputValue) -> Result<f64> {
        if !a.same_kind(b) {
            return Err(mismatch(self.name, a, b));
        }
        let ca = self.cache(a)?;
        let cb = self.cache(b)?;
        self.eval_cached(a, &ca, b, &cb)
    }

    pub fn caches(&self, column: &[OutputValue]) -> Result<Vec<PointCache>> {
        column
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                self.cache(v).map_err(|e| Error::GramEntry {
                    i,
                    j: i,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn gram(&self, column: &[OutputValue]) -> Result<GramMatrix> {
        if column.is_empty() {
            return Err(Error::invalid("gram of an empty column"));
        }
        if let Some(bad) = column.iter().find(|v| !v.same_kind(&column[0])) {
            return Err(mismatch(self.name, &column[0], bad));
        }
        let caches = self.caches(column)?;
        let n = column.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        self.eval_cached(&column[i], &caches[i], &column[j], &caches[j])
                            .map_err(|e| Error::GramEntry {
                                i,
                                j,
                                source: Box::new(e),
                            })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(GramMatrix { n, values })
    }

    /// Mean of `k(p_i, q_j)` over all pairs.
    pub fn cross_mean(&self, p: &[OutputValue], cp: &[PointCache], q: &[OutputValue], cq: &[PointCache]) -> Result<f64> {
        let norm = (p.len() * q.len()) as f64;
        if let (Imp::Scalar(k @ (ScalarKernel::Linear | ScalarKernel::Gaussian { .. })), Some(xs), Some(ys)) =
            (&self.imp, scalar_slice(p), scalar_slice(q))
        {
            return Ok(match k {
                ScalarKernel::Linear => xs.iter().sum::<f64>() * ys.iter().sum::<f64>() / norm,
                _ => {
                    let mut total = 0.0;
                    for x in &xs {
                        let mut row = 0.0;
                        for y in &ys {
                            row += k.value(*x, *y);
                        }
                        total += row;
                    }
                    total / norm
                }
            });
        }
        if let Imp::Dirac(levels) = self.imp {
            if let (Some(a), Some(b)) = (level_counts(p, levels), level_counts(q, levels)) {
                return Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / norm);
            }
        }
        let mut total = 0.0;
        for (a, ca) in p.iter().zip(cp) {
            for (b, cb) in q.iter().zip(cq) {
                total += self.eval_cached(a, ca, b, cb)?;
            }
        }
        Ok(total / (p.len() * q.len()) as f64)
    }

    pub fn within_mean(&self, p: &[OutputValue], cp: &[PointCache], stat: Statistic) -> Result<f64> {
        let n = p.len();
        match stat {
            Statistic::V => self.cross_mean(p, cp, p, cp),
            Statistic::U => {
                if n < 2 {
                    return Err(Error::invalid("U-statistic needs at least two points per sample"));
                }
                let mut total = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        total += self.eval_cached(&p[i], &cp[i], &p[j], &cp[j])?;
                    }
                }
                Ok(2.0 * total / (n * (n - 1)) as f64)
            }
        }
    }

    pub fn mmd2(&self, p: &[OutputValue], q: &[OutputValue], stat: Statistic) -> Result<f64> {
        if p.is_empty() || q.is_empty() {
            return Err(Error::invalid("MMD between empty samples"));
        }
        if let Some(bad) = p.iter().chain(q).find(|v| !v.same_kind(&p[0])) {
            return Err(mismatch(self.name, &p[0], bad));
        }
        let cp = self.caches(p)?;
        let cq = self.caches(q)?;
        let pp = self.within_mean(p, &cp, stat)?;
        let qq = self.within_mean(q, &cq, stat)?;
        let pq = self.cross_mean(p, &cp, q, &cq)?;
        Ok(pp + qq - 2.0 * pq)
    }
}

/// `k(a, b)` for the kernel described by `spec`.
pub fn eval_kernel(spec: &KernelSpec, a: &OutputValue, b: &OutputValue) -> Result<f64> {
    PreparedKernel::new(spec)?.eval(a, b)
}

/// Gram matrix of a kernel over a homogeneous column.
pub fn gram(spec: &KernelSpec, column: &[OutputValue]) -> Result<GramMatrix> {
    PreparedKernel::new(spec)?.gram(column)
}

/// V-statistic estimate of MMD² between two samples.
pub fn mmd2(p: &[OutputValue], q: &[OutputValue], spec: &KernelSpec) -> Result<f64> {
    PreparedKernel::new(spec)?.mmd2(p, q, Statistic::V)
}

pub fn mmd2_with(p: &[OutputValue], q: &[OutputValue], spec: &KernelSpec, stat: Statistic) -> Result<f64> {
    PreparedKernel::new(spec)?.mmd2(p, q, stat)
}

/// `prod_l (1 + k_l(a_l, b_l))` for vectors of scalar inputs.
pub fn product_kernel(factors: &[KernelSpec], a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != factors.len() || b.len() != factors.len() {
        return Err(Error::invalid(format!(
            "product kernel with {} factors applied to vectors of length {} and {}",
            factors.len(),
            a.len(),
            b.len()
        )));
    }
    let mut prod = 1.0;
    for ((spec, x), y) in factors.iter().zip(a).zip(b) {
        let k = ScalarKernel::new(spec)?;
        k.check(*x)?;
        k.check(*y)?;
        prod *= 1.0 + k.value(*x, *y);
    }
    Ok(prod)
}

/// Symmetric n×n kernel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl GramMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::invalid("gram values do not form a square matrix"));
        }
        Ok(GramMatrix { n, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn diag_mean(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum::<f64>() / self.n as f64
    }

    /// Mean over off-diagonal entries.
    pub fn offdiag_mean(&self) -> f64 {
        let n = self.n as f64;
        let diag: f64 = (0..self.n).map(|i| self.get(i, i)).sum();
        (self.values.iter().sum::<f64>() - diag) / (n * (n - 1.0))
    }

    /// Plug-in estimate of `E k(Y, Y) - E k(Y, Y')`.
    pub fn total_mmd(&self) -> f64 {
        self.diag_mean() - self.mean()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.values)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.to_dmatrix())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Dissimilarity used by [`median_heuristic`].
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Squared MMD between bags under the given scalar kernel.
    Mmd(KernelSpec),
    /// Squared 2-Wasserstein distance between bags.
    Wasserstein2,
}

/// Lower median of the pairwise dissimilarities of a column. For the MMD and
/// Wasserstein metrics the dissimilarity is the squared distance, the
/// quantity that appears in the exponent of the embedding kernels.
pub fn median_heuristic(column: &[OutputValue], metric: &Metric) -> Result<f64> {
    let n = column.len();
    if n < 2 {
        return Err(Error::DegenerateSample("median heuristic needs at least two values".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut d: Vec<f64> = match metric {
        Metric::Euclidean => pairs
            .iter()
            .map(|&(i, j)| euclidean(&column[i], &column[j]))
            .collect::<Result<_>>()?,
        Metric::Mmd(inner) => {
            let k = ScalarKernel::new(inner)?;
            let bags: Vec<&[f64]> = column.iter().map(bag).collect::<Result<_>>()?;
            let selfs: Vec<f64> = bags.par_iter().map(|b| cross_mean(&k, b, b)).collect();
            pairs
                .par_iter()
                .map(|&(i, j)| bag_mmd2(&k, bags[i], selfs[i], bags[j], selfs[j]))
                .collect()
        }
        Metric::Wasserstein2 => {
            let sorted: Vec<Vec<f64>> = column
                .iter()
                .map(|v| {
                    let mut s = bag(v)?.to_vec();
                    s.sort_by(f64::total_cmp);
                    Ok(s)
                })
                .collect::<Result<_>>()?;
            pairs
                .iter()
                .map(|&(i, j)| wasserstein2_sq_sorted(&sorted[i], &sorted[j]))
                .collect()
        }
    };
    if d.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateSample("all pairwise distances are zero".into()));
    }
    d.sort_by(f64::total_cmp);
    let med = d[(d.len() - 1) / 2];
    if !(med > 0.0) {
        return Err(Error::DegenerateSample(
            "median pairwise distance is zero; too many repeated values".into(),
        ));
    }
    Ok(med)
}

fn bag(v: &OutputValue) -> Result<&[f64]> {
    match v {
        OutputValue::DistSample { values } => Ok(values),
        other => Err(mismatch("median heuristic", other, other)),
    }
}

fn euclidean(a: &OutputValue, b: &OutputValue) -> Result<f64> {
    match (a, b) {
        (OutputValue::Scalar { value: x }, OutputValue::Scalar { value: y }) => Ok((x - y).abs()),
        (OutputValue::Curve { values: x, .. }, OutputValue::Curve { values: y, .. }) if x.len() == y.len() => {
            Ok(x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        }
        _ => Err(mismatch("euclidean metric", a, b)),
    }
}

/// Monte Carlo check of `E_{t ~ P} k(x, t) = 0` at a few probe points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroMeanReport {
    pub probes: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub max_abs_mean: f64,
}

impl ZeroMeanReport {
    /// Every probe mean lies within `k` Monte Carlo standard errors of zero.
    pub fn within_std_errors(&self, k: f64) -> bool {
        self.means
            .iter()
            .zip(&self.std_errors)
            .all(|(m, se)| m.abs() <= k * se)
    }
}

pub fn verify_zero_mean(
    spec: &KernelSpec,
    marginal: &MarginalDist,
    probe_points: &[f64],
    mc_n: usize,
    seed: u64,
) -> Result<ZeroMeanReport> {
    if mc_n < 2 {
        return Err(Error::invalid("zero-mean check needs at least two draws"));
    }
    let k = ScalarKernel::new(spec)?;
    let mut rng = substream(seed, Op::ZeroMeanCheck, 0, 0);
    let draws: Vec<f64> = (0..mc_n).map(|_| marginal.sample(&mut rng)).collect();
    for t in draws.iter().chain(probe_points) {
        k.check(*t)?;
    }
    let caches: Vec<f64> = draws.par_iter().map(|t| k.point_cache(*t)).collect();
    let mut means = Vec::with_capacity(probe_points.len());
    let mut std_errors = Vec::with_capacity(probe_points.len());
    for &x in probe_points {
        let cx = k.point_cache(x);
        let vals: Vec<f64> = draws
            .iter()
            .zip(&caches)
            .map(|(t, ct)| k.value_cached(x, cx, *t, *ct))
            .collect();
        let mean = vals.iter().sum::<f64>() / mc_n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mc_n - 1) as f64;
        means.push(mean);
        std_errors.push((var / mc_n as f64).sqrt());
    }
    let max_abs_mean = means.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ZeroMeanReport {
        probes: probe_points.to_vec(),
        means,
        std_errors,
        max_abs_mean,
    })
}
