use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{substream, Op, StreamRng};
use crate::value::OutputValue;

type EvalFn = dyn Fn(&[f64], &mut StreamRng) -> Result<OutputValue> + Send + Sync;

/// A numerical model `Y = eta(X)`. The random stream is only consumed by
/// stochastic models. Clones share the evaluation counter.
#[derive(Clone)]
pub struct ModelFn {
    d: usize,
    f: Arc<EvalFn>,
    count: Arc<AtomicU64>,
}

impl fmt::Debug for ModelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelFn")
            .field("d", &self.d)
            .field("evaluations", &self.evaluations())
            .finish()
    }
}

impl ModelFn {
    pub fn new(
        d: usize,
        f: impl Fn(&[f64], &mut StreamRng) -> Result<OutputValue> + Send + Sync + 'static,
    ) -> Self {
        ModelFn {
            d,
            f: Arc::new(f),
            count: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Deterministic model of any output kind.
    pub fn deterministic(d: usize, f: impl Fn(&[f64]) -> Result<OutputValue> + Send + Sync + 'static) -> Self {
        ModelFn::new(d, move |x, _| f(x))
    }

    /// Deterministic scalar model.
    pub fn scalar(d: usize, f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        ModelFn::new(d, move |x, _| f(x).map(OutputValue::scalar))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn eval(&self, x: &[f64], rng: &mut StreamRng) -> Result<OutputValue> {
        if x.len() != self.d {
            return Err(Error::invalid(format!(
                "model of arity {} called with {} inputs",
                self.d,
                x.len()
            )));
        }
        self.count.fetch_add(1, Ordering::Relaxed);
        (self.f)(x, rng)
    }

    pub fn evaluations(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    /// Evaluate rows in parallel. Row `i` draws from the substream
    /// `(seed, Model, tag, first_row + i)`, so results do not depend on
    /// scheduling.
    pub fn eval_rows(&self, rows: &[Vec<f64>], seed: u64, tag: u32, first_row: u64) -> Result<Vec<OutputValue>> {
        rows.par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = substream(seed, Op::Model, tag, first_row + i as u64);
                self.eval(x, &mut rng)
            })
            .collect()
    }
}
