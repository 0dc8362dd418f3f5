//! Shapley effects over subset value functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    double_loop_mmd, knn_complementary_value_gram, EstimatorConfig, HsicFlavor, HsicGrams, InputKernel, InputSampler,
    ModelFn, MAX_TABLE_DIM,
};
use crate::kernel::{GramMatrix, KernelSpec};
use crate::rng::{substream, Op};
use crate::subset::{ClosedValueTable, Subset};
use crate::value::SampleSet;

/// Largest dimension handled by the exact subset formula.
pub const MAX_EXACT_DIM: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    VarianceClosed,
    MmdClosed,
    /// `E_{X_{-A}}[E k(Y, Y) - E k(Y, Y') | X_{-A}]`, whose Shapley
    /// effects coincide with those of `MmdClosed`.
    MmdComplementary,
    HsicClosed,
}

type LazyFn = dyn Fn(Subset) -> Result<f64> + Send + Sync;

enum Source {
    Table(Vec<f64>),
    Lazy {
        f: Arc<LazyFn>,
        cache: Mutex<HashMap<u32, f64>>,
    },
}

/// A set function `val(A)` over subsets of `d` inputs. Every value is
/// computed at most once, so effects from one value function always add up
/// to `(val(full) - val(∅)) / normalizer`.
pub struct ValueFunction {
    pub kind: ValueKind,
    pub d: usize,
    source: Source,
}

impl fmt::Debug for ValueFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValueFunction")
            .field("kind", &self.kind)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

impl ValueFunction {
    /// Values indexed by subset bits, `values.len() == 2^d`.
    pub fn from_values(kind: ValueKind, d: usize, values: Vec<f64>) -> Result<Self> {
        if d > 24 || values.len() != 1usize << d {
            return Err(Error::invalid(format!("expected 2^{d} subset values, got {}", values.len())));
        }
        Ok(ValueFunction {
            kind,
            d,
            source: Source::Table(values),
        })
    }

    pub fn from_table(kind: ValueKind, table: &ClosedValueTable) -> Result<Self> {
        let values = Subset::all(table.d).map(|a| table.require(a)).collect::<Result<_>>()?;
        ValueFunction::from_values(kind, table.d, values)
    }

    /// Values computed on demand and cached.
    pub fn lazy(kind: ValueKind, d: usize, f: impl Fn(Subset) -> Result<f64> + Send + Sync + 'static) -> Result<Self> {
        if d == 0 || d > 31 {
            return Err(Error::invalid(format!("unsupported dimension {d}")));
        }
        Ok(ValueFunction {
            kind,
            d,
            source: Source::Lazy {
                f: Arc::new(f),
                cache: Mutex::new(HashMap::new()),
            },
        })
    }

    pub fn value(&self, a: Subset) -> Result<f64> {
        match &self.source {
            Source::Table(v) => v
                .get(a.bits() as usize)
                .copied()
                .ok_or_else(|| Error::IncompleteTable(a)),
            Source::Lazy { f, cache } => {
                if let Some(v) = cache.lock().expect("value cache").get(&a.bits()) {
                    return Ok(*v);
                }
                let v = f(a)?;
                Ok(*cache.lock().expect("value cache").entry(a.bits()).or_insert(v))
            }
        }
    }

    /// `val(full) - val(∅)`, the sum of the unnormalized effects.
    pub fn normalizer(&self) -> Result<f64> {
        Ok(self.value(Subset::full(self.d))? - self.value(Subset::EMPTY)?)
    }

    /// Number of distinct subset values computed so far.
    pub fn evaluated(&self) -> usize {
        match &self.source {
            Source::Table(v) => v.len(),
            Source::Lazy { cache, .. } => cache.lock().expect("value cache").len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapleyMethod {
    ExactSubsets,
    Permutation { num_perms: usize },
}

/// Normalized Shapley effects of each input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub effects: Vec<f64>,
    pub method: ShapleyMethod,
    pub kind: ValueKind,
    pub normalizer: f64,
    /// Inputs with a negative estimated effect, reported as-is.
    pub negative_effects: Vec<usize>,
    /// The normalizer is not clearly positive, so the effects carry little
    /// information.
    pub degenerate_normalizer: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<Vec<f64>>>,
}

impl ShapleyReport {
    fn from_raw(raw: Vec<f64>, method: ShapleyMethod, val: &ValueFunction) -> Result<Self> {
        let normalizer = val.normalizer()?;
        if !normalizer.is_finite() || normalizer == 0.0 {
            return Err(Error::DegenerateOutput(format!(
                "Shapley normalizer val(full) - val(empty) = {normalizer}"
            )));
        }
        let effects: Vec<f64> = raw.iter().map(|r| r / normalizer).collect();
        let negative_effects = effects
            .iter()
            .enumerate()
            .filter(|(_, e)| **e < 0.0)
            .map(|(l, _)| l)
            .collect();
        Ok(ShapleyReport {
            effects,
            method,
            kind: val.kind,
            normalizer,
            negative_effects,
            degenerate_normalizer: normalizer < 0.0,
            replicates: None,
        })
    }

    pub fn sum(&self) -> f64 {
        self.effects.iter().sum()
    }

    /// Index of the largest effect (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (l, e) in self.effects.iter().enumerate() {
            if *e > self.effects[best] {
                best = l;
            }
        }
        best
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `Sh_l = (1/d) sum_{A not containing l} C(d-1, |A|)^{-1} [val(A + l) - val(A)]`,
/// normalized by `val(full) - val(∅)`.
pub fn shapley_exact(val: &ValueFunction) -> Result<ShapleyReport> {
    let d = val.d;
    if d > MAX_EXACT_DIM {
        return Err(Error::TooManyInputs {
            d,
            limit: MAX_EXACT_DIM,
            what: "exact Shapley effects; use shapley_permutation",
        });
    }
    let values: Vec<f64> = Subset::all(d).map(|a| val.value(a)).collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..d).map(|s| 1.0 / (d as f64 * binomial(d - 1, s))).collect();
    let raw = (0..d)
        .map(|l| {
            let mut s = 0.0;
            for a in Subset::all(d).filter(|a| !a.contains(l)) {
                s += weights[a.len()] * (values[a.with(l).bits() as usize] - values[a.bits() as usize]);
            }
            s
        })
        .collect();
    ShapleyReport::from_raw(raw, ShapleyMethod::ExactSubsets, val)
}

/// Average marginal contributions along the given orders of the inputs.
pub fn shapley_from_permutations(val: &ValueFunction, perms: &[Vec<usize>]) -> Result<ShapleyReport> {
    let d = val.d;
    if perms.is_empty() {
        return Err(Error::invalid("at least one permutation is needed"));
    }
    let mut raw = vec![0.0; d];
    for p in perms {
        let mut seen = vec![false; d];
        if p.len() != d || p.iter().any(|l| *l >= d || std::mem::replace(&mut seen[*l], true)) {
            return Err(Error::invalid(format!("{p:?} is not a permutation of 0..{d}")));
        }
        let mut pred = Subset::EMPTY;
        let mut before = val.value(pred)?;
        for &l in p {
            let next = pred.with(l);
            let after = val.value(next)?;
            raw[l] += after - before;
            pred = next;
            before = after;
        }
    }
    for r in &mut raw {
        *r /= perms.len() as f64;
    }
    ShapleyReport::from_raw(raw, ShapleyMethod::Permutation { num_perms: perms.len() }, val)
}

/// Shapley effects from `num_perms` uniformly drawn input orders.
pub fn shapley_permutation(val: &ValueFunction, num_perms: usize, seed: u64) -> Result<ShapleyReport> {
    if num_perms == 0 {
        return Err(Error::invalid("num_perms must be at least 1"));
    }
    let mut rng = substream(seed, Op::ShapleyPerm, 0, 0);
    let perms: Vec<Vec<usize>> = (0..num_perms)
        .map(|_| {
            let mut p: Vec<usize> = (0..val.d).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    shapley_from_permutations(val, &perms)
}

/// Exact formula up to [`MAX_EXACT_DIM`] inputs, permutations beyond.
pub fn shapley_auto(val: &ValueFunction, num_perms: usize, seed: u64) -> Result<ShapleyReport> {
    if val.d <= MAX_EXACT_DIM {
        shapley_exact(val)
    } else {
        shapley_permutation(val, num_perms, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdShapleyEstimator {
    Knn,
    DoubleLoop,
}

/// Where the MMD-Shapley values come from.
#[derive(Debug, Clone, Copy)]
pub enum ShapleyData<'a> {
    /// Given data with a precomputed output Gram matrix.
    Sample { sample: &'a SampleSet, gram: &'a GramMatrix },
    Model { model: &'a ModelFn, sampler: &'a InputSampler },
}

/// Number of random orders used when `d` exceeds [`MAX_EXACT_DIM`].
pub const DEFAULT_NUM_PERMS: usize = 200;

/// MMD-Shapley effects. The kNN path uses complementary values with
/// `val'(∅) = 0` and `val'(full)` the total MMD², the double-loop path the
/// closed values.
pub fn mmd_shapley(
    data: ShapleyData<'_>,
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
    estimator: MmdShapleyEstimator,
) -> Result<ShapleyReport> {
    cfg.validate()?;
    let val = match (estimator, data) {
        (MmdShapleyEstimator::Knn, ShapleyData::Sample { sample, gram }) => {
            let d = sample.dim();
            let total = gram.total_mmd();
            if !(total > 0.0) {
                return Err(Error::DegenerateOutput(format!("total MMD² is {total}")));
            }
            let inputs = sample.inputs.clone();
            let gram = gram.clone();
            let cfg = cfg.clone();
            let full = Subset::full(d);
            let f = move |a: Subset| {
                if a.is_empty() {
                    Ok(0.0)
                } else if a == full {
                    Ok(total)
                } else {
                    knn_complementary_value_gram(&gram, &inputs, a, &cfg)
                }
            };
            if d <= MAX_EXACT_DIM {
                let values = Subset::all(d).map(f).collect::<Result<_>>()?;
                ValueFunction::from_values(ValueKind::MmdComplementary, d, values)?
            } else {
                ValueFunction::lazy(ValueKind::MmdComplementary, d, f)?
            }
        }
        (MmdShapleyEstimator::DoubleLoop, ShapleyData::Model { model, sampler }) => {
            let d = sampler.dim();
            let (model, sampler, spec, cfg) = (model.clone(), sampler.clone(), spec.clone(), cfg.clone());
            let f = move |a: Subset| double_loop_mmd(&model, &sampler, a, &spec, &cfg);
            if d <= MAX_EXACT_DIM {
                let values = Subset::all(d).map(f).collect::<Result<_>>()?;
                ValueFunction::from_values(ValueKind::MmdClosed, d, values)?
            } else {
                ValueFunction::lazy(ValueKind::MmdClosed, d, f)?
            }
        }
        (MmdShapleyEstimator::Knn, ShapleyData::Model { .. }) => {
            return Err(Error::Capability("the kNN estimator needs a given sample".into()))
        }
        (MmdShapleyEstimator::DoubleLoop, ShapleyData::Sample { .. }) => {
            return Err(Error::Capability("the double-loop estimator needs model access".into()))
        }
    };
    let mut report = shapley_auto(&val, DEFAULT_NUM_PERMS, cfg.stream_seed())?;
    report.degenerate_normalizer |= !(report.normalizer > 0.0);
    Ok(report)
}

/// HSIC-Shapley effects from one sample: one Gram matrix per input factor,
/// combined per subset. The normalizer is `HSIC(X, Y)`.
pub fn hsic_shapley(
    sample: &SampleSet,
    kernels: &[InputKernel],
    output_gram: GramMatrix,
    flavor: HsicFlavor,
    cfg: &EstimatorConfig,
) -> Result<ShapleyReport> {
    let grams = HsicGrams::new(sample, kernels, output_gram)?;
    hsic_shapley_grams(&grams, flavor, cfg)
}

pub fn hsic_shapley_grams(grams: &HsicGrams, flavor: HsicFlavor, cfg: &EstimatorConfig) -> Result<ShapleyReport> {
    let d = grams.dim();
    let val = if d <= MAX_TABLE_DIM.min(MAX_EXACT_DIM) {
        ValueFunction::from_table(ValueKind::HsicClosed, &grams.table(flavor)?)?
    } else {
        let g = grams.clone();
        ValueFunction::lazy(ValueKind::HsicClosed, d, move |a| g.closed(a, flavor))?
    };
    let degenerate = grams.normalizer_is_degenerate()?;
    let mut report = match shapley_auto(&val, DEFAULT_NUM_PERMS, cfg.stream_seed()) {
        Ok(r) => r,
        Err(Error::DegenerateOutput(_)) if degenerate => ShapleyReport {
            effects: vec![0.0; d],
            method: ShapleyMethod::ExactSubsets,
            kind: ValueKind::HsicClosed,
            normalizer: 0.0,
            negative_effects: Vec::new(),
            degenerate_normalizer: true,
            replicates: None,
        },
        Err(e) => return Err(e),
    };
    report.degenerate_normalizer |= degenerate;
    Ok(report)
}
