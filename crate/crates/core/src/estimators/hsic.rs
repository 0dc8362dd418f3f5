use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::scalar::ScalarKernel;
use crate::kernel::{verify_zero_mean, GramMatrix, KernelSpec, ZeroMeanReport};
use crate::marginal::MarginalDist;
use crate::subset::{ClosedValueTable, Subset};
use crate::value::SampleSet;

/// Largest dimension for which all `2^d` subset values are tabulated.
pub const MAX_TABLE_DIM: usize = 16;

/// Tolerance on `max |E k(x, t)|` before any HSIC computation.
pub const ZERO_MEAN_TOL: f64 = 0.01;
const ZERO_MEAN_DRAWS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HsicFlavor {
    #[default]
    V,
    U,
}

/// A zero-mean kernel on one input. With `pit` set the kernel acts on
/// `F(x)`, the probability integral transform under `marginal`, and must
/// then be zero-mean under Uniform(0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct InputKernel {
    pub spec: KernelSpec,
    pub marginal: MarginalDist,
    pub pit: bool,
}

impl InputKernel {
    /// Sobolev kernel of order `r` applied after the transform to [0, 1].
    pub fn sobolev(r: u32, marginal: MarginalDist) -> Self {
        InputKernel {
            spec: KernelSpec::SobolevZeroMean { r },
            marginal,
            pit: true,
        }
    }

    /// Durrande construction from `base` under the input's own marginal.
    pub fn durrande(base: KernelSpec, marginal: MarginalDist) -> Self {
        InputKernel {
            spec: KernelSpec::DurrandeZeroMean {
                base: Box::new(base),
                marginal: marginal.clone(),
            },
            marginal,
            pit: false,
        }
    }

    fn reference(&self) -> MarginalDist {
        if self.pit {
            MarginalDist::Uniform { a: 0.0, b: 1.0 }
        } else {
            self.marginal.clone()
        }
    }

    fn transform(&self, x: f64) -> f64 {
        if self.pit {
            self.marginal.cdf(x)
        } else {
            x
        }
    }

    /// Monte Carlo zero-mean check; fails with `AssumptionViolated` when
    /// some probe mean exceeds [`ZERO_MEAN_TOL`].
    pub fn verify(&self, seed: u64) -> Result<ZeroMeanReport> {
        let reference = self.reference();
        let report = verify_zero_mean(&self.spec, &reference, &reference.probe_points(), ZERO_MEAN_DRAWS, seed)?;
        if report.max_abs_mean > ZERO_MEAN_TOL {
            return Err(Error::AssumptionViolated(format!(
                "input kernel {} is not zero-mean under its input law (max |mean| = {:.4}); \
                 the HSIC decomposition needs zero-mean input kernels",
                self.spec.name(),
                report.max_abs_mean
            )));
        }
        Ok(report)
    }

    /// Gram matrix on one input column.
    pub fn gram(&self, column: &[f64]) -> Result<GramMatrix> {
        let k = ScalarKernel::new(&self.spec)?;
        let t: Vec<f64> = column.iter().map(|x| self.transform(*x)).collect();
        for v in &t {
            k.check(*v)?;
        }
        let c: Vec<f64> = t.par_iter().map(|v| k.point_cache(*v)).collect();
        let n = t.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| k.value_cached(t[i], c[i], t[j], c[j])).collect())
            .collect();
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                values[i * n + i + off] = v;
                values[(i + off) * n + i] = v;
            }
        }
        GramMatrix::from_values(n, values)
    }
}

/// Verify every input kernel once.
pub fn verify_input_kernels(kernels: &[InputKernel]) -> Result<()> {
    for (l, k) in kernels.iter().enumerate() {
        k.verify(l as u64)?;
    }
    Ok(())
}

/// One Gram matrix per input factor plus the output Gram matrix, from which
/// HSIC values of every subset follow without further kernel evaluations.
#[derive(Debug, Clone)]
pub struct HsicGrams {
    pub inputs: Vec<GramMatrix>,
    pub output: GramMatrix,
}

impl HsicGrams {
    /// Verifies the zero-mean property of every input kernel, then builds
    /// the factor Gram matrices.
    pub fn new(sample: &SampleSet, kernels: &[InputKernel], output: GramMatrix) -> Result<Self> {
        if kernels.len() != sample.dim() {
            return Err(Error::invalid(format!(
                "{} input kernels for {} inputs",
                kernels.len(),
                sample.dim()
            )));
        }
        if output.n != sample.len() {
            return Err(Error::invalid("output Gram matrix and sample sizes differ"));
        }
        verify_input_kernels(kernels)?;
        let inputs = kernels
            .iter()
            .enumerate()
            .map(|(l, k)| k.gram(&sample.column(l)))
            .collect::<Result<_>>()?;
        Ok(HsicGrams { inputs, output })
    }

    /// Skip verification, for kernels already checked elsewhere.
    pub fn from_grams(inputs: Vec<GramMatrix>, output: GramMatrix) -> Result<Self> {
        if inputs.iter().any(|g| g.n != output.n) {
            return Err(Error::invalid("Gram matrices differ in size"));
        }
        Ok(HsicGrams { inputs, output })
    }

    pub fn n(&self) -> usize {
        self.output.n
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    fn check_subset(&self, a: Subset) -> Result<()> {
        if u64::from(a.bits()) >= 1u64 << self.dim() {
            return Err(Error::invalid(format!("subset {a} exceeds dimension {}", self.dim())));
        }
        if self.n() < 2 {
            return Err(Error::invalid("HSIC needs at least two points"));
        }
        Ok(())
    }

    // sum over the pairs entering the statistic, with the normalizing count
    fn pair_average(&self, flavor: HsicFlavor, f: impl Fn(usize, usize) -> f64 + Sync) -> f64 {
        let n = self.n();
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    if flavor == HsicFlavor::U && i == j {
                        continue;
                    }
                    s += f(i, j);
                }
                s
            })
            .collect();
        let count = match flavor {
            HsicFlavor::V => (n * n) as f64,
            HsicFlavor::U => (n * (n - 1)) as f64,
        };
        rows.iter().sum::<f64>() / count
    }

    /// `HSIC(X_A, Y)` with the product kernel `prod_{l in A} (1 + k_l)`.
    pub fn closed(&self, a: Subset, flavor: HsicFlavor) -> Result<f64> {
        self.check_subset(a)?;
        if a.is_empty() {
            return Ok(0.0);
        }
        let idx = a.indices();
        Ok(self.pair_average(flavor, |i, j| {
            let mut p = 1.0;
            for l in &idx {
                p *= 1.0 + self.inputs[*l].get(i, j);
            }
            (p - 1.0) * self.output.get(i, j)
        }))
    }

    /// Pure term of `A`: the statistic with the kernel `prod_{l in A} k_l`.
    pub fn pure(&self, a: Subset, flavor: HsicFlavor) -> Result<f64> {
        self.check_subset(a)?;
        if a.is_empty() {
            return Ok(0.0);
        }
        let idx = a.indices();
        Ok(self.pair_average(flavor, |i, j| {
            let mut p = 1.0;
            for l in &idx {
                p *= self.inputs[*l].get(i, j);
            }
            p * self.output.get(i, j)
        }))
    }

    /// Closed values of all subsets in one pass over the pairs; the total is
    /// the value of the full set.
    pub fn table(&self, flavor: HsicFlavor) -> Result<ClosedValueTable> {
        let d = self.dim();
        if d > MAX_TABLE_DIM {
            return Err(Error::TooManyInputs {
                d,
                limit: MAX_TABLE_DIM,
                what: "tabulating all HSIC subset values",
            });
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::invalid("HSIC needs at least two points"));
        }
        let size = 1usize << d;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![0.0; size];
                let mut prod = vec![1.0; size];
                for j in 0..n {
                    if flavor == HsicFlavor::U && i == j {
                        continue;
                    }
                    let y = self.output.get(i, j);
                    for a in 1..size {
                        let low = a & a.wrapping_neg();
                        let l = low.trailing_zeros() as usize;
                        prod[a] = prod[a ^ low] * (1.0 + self.inputs[l].get(i, j));
                        acc[a] += (prod[a] - 1.0) * y;
                    }
                }
                acc
            })
            .collect();
        let count = match flavor {
            HsicFlavor::V => (n * n) as f64,
            HsicFlavor::U => (n * (n - 1)) as f64,
        };
        let mut sums = vec![0.0; size];
        for row in &rows {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        let values: Vec<f64> = sums.iter().map(|s| s / count).collect();
        let total = values[size - 1];
        let mut t = ClosedValueTable::new(d, total)?;
        for a in 1..size {
            t.set(Subset(a as u32), values[a]);
        }
        Ok(t)
    }

    /// Rough null standard deviation of the U-statistic of `A`, from the
    /// second moment of its off-diagonal terms.
    pub fn null_sd(&self, a: Subset) -> Result<f64> {
        self.check_subset(a)?;
        let n = self.n() as f64;
        let idx = a.indices();
        let m2 = self.pair_average(HsicFlavor::U, |i, j| {
            let mut p = 1.0;
            for l in &idx {
                p *= 1.0 + self.inputs[*l].get(i, j);
            }
            ((p - 1.0) * self.output.get(i, j)).powi(2)
        });
        Ok((2.0 * m2 / (n * (n - 1.0))).sqrt())
    }

    /// True when the dependence between all inputs and the output is not
    /// distinguishable from zero: the U-statistic of the full set is below
    /// three null standard deviations, or the V-statistic is not positive.
    pub fn normalizer_is_degenerate(&self) -> Result<bool> {
        let full = Subset::full(self.dim());
        let u = self.closed(full, HsicFlavor::U)?;
        let v = self.closed(full, HsicFlavor::V)?;
        Ok(v <= 0.0 || u <= 3.0 * self.null_sd(full)?)
    }
}

/// HSIC between the inputs of `A` and the output.
pub fn hsic_stat(
    sample: &SampleSet,
    a: Subset,
    kernels: &[InputKernel],
    output_spec: &KernelSpec,
    flavor: HsicFlavor,
) -> Result<f64> {
    let out = crate::kernel::gram(output_spec, &sample.outputs)?;
    HsicGrams::new(sample, kernels, out)?.closed(a, flavor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Op};
    use crate::subset::mobius_combine;
    use crate::value::OutputValue;
    use rand::Rng;

    fn unif() -> MarginalDist {
        MarginalDist::uniform(0.0, 1.0).unwrap()
    }

    fn sample(n: usize, d: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> SampleSet {
        let mut rng = substream(seed, Op::Sample, 0, 0);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let outputs = inputs.iter().map(|r| OutputValue::scalar(f(r))).collect();
        SampleSet::new(inputs, outputs).unwrap()
    }

    fn grams(s: &SampleSet, out: &KernelSpec) -> HsicGrams {
        let kernels = vec![InputKernel::sobolev(1, unif()); s.dim()];
        HsicGrams::new(s, &kernels, crate::kernel::gram(out, &s.outputs).unwrap()).unwrap()
    }

    #[test]
    fn non_zero_mean_kernel_is_rejected() {
        let k = InputKernel {
            spec: KernelSpec::gaussian(1.0),
            marginal: unif(),
            pit: false,
        };
        assert!(matches!(k.verify(0), Err(Error::AssumptionViolated(_))));
        assert!(InputKernel::sobolev(1, unif()).verify(0).is_ok());
        let n = MarginalDist::normal(0.0, 1.0).unwrap();
        assert!(InputKernel::durrande(KernelSpec::gaussian(1.0), n).verify(0).is_ok());
    }

    #[test]
    fn empty_subset_is_zero() {
        let s = sample(30, 2, 1, |x| x[0]);
        let g = grams(&s, &KernelSpec::gaussian(0.5));
        assert_eq!(g.closed(Subset::EMPTY, HsicFlavor::V).unwrap(), 0.0);
        assert_eq!(g.closed(Subset::EMPTY, HsicFlavor::U).unwrap(), 0.0);
    }

    #[test]
    fn table_matches_single_subset_values() {
        let s = sample(60, 3, 2, |x| x[0] + x[1] * x[2]);
        let g = grams(&s, &KernelSpec::gaussian(0.5));
        for flavor in [HsicFlavor::V, HsicFlavor::U] {
            let t = g.table(flavor).unwrap();
            for a in Subset::all(3).skip(1) {
                let direct = g.closed(a, flavor).unwrap();
                assert!((t.get(a).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mobius_terms_are_pure_product_statistics() {
        let s = sample(50, 3, 3, |x| (3.0 * x[0]).sin() + x[1] * x[2]);
        let g = grams(&s, &KernelSpec::gaussian(0.5));
        let t = g.table(HsicFlavor::V).unwrap();
        let terms = mobius_combine(&t).unwrap();
        let mut sum = 0.0;
        for a in Subset::all(3).skip(1) {
            let p = g.pure(a, HsicFlavor::V).unwrap();
            assert!((terms[a.bits() as usize] - p).abs() < 1e-10);
            sum += p;
        }
        assert!((sum - t.total).abs() < 1e-10);
    }

    #[test]
    fn output_driven_by_x1_only() {
        let s = sample(400, 2, 4, |x| x[0]);
        let g = grams(&s, &KernelSpec::gaussian(0.3));
        let h1 = g.closed(Subset::singleton(0), HsicFlavor::V).unwrap();
        let h2 = g.closed(Subset::singleton(1), HsicFlavor::V).unwrap();
        assert!(h1 > 10.0 * h2.abs(), "{h1} {h2}");
        assert!(!g.normalizer_is_degenerate().unwrap());
    }

    #[test]
    fn independent_output_is_flagged() {
        let mut s = sample(300, 2, 5, |_| 0.0);
        let mut rng = substream(6, Op::Sample, 0, 0);
        for o in &mut s.outputs {
            *o = OutputValue::scalar(rng.random());
        }
        let g = grams(&s, &KernelSpec::gaussian(0.3));
        assert!(g.normalizer_is_degenerate().unwrap());
    }

    #[test]
    fn u_and_v_differ_by_order_one_over_n() {
        let s = sample(200, 2, 7, |x| x[0] * x[1]);
        let g = grams(&s, &KernelSpec::gaussian(0.3));
        let a = Subset::full(2);
        let diff = (g.closed(a, HsicFlavor::U).unwrap() - g.closed(a, HsicFlavor::V).unwrap()).abs();
        assert!(diff < 20.0 / 200.0);
    }
}
