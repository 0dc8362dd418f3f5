//! Kernels on a single real argument, including the two zero-mean
//! constructions built from a base kernel.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sobolev::{check_order, sobolev_unchecked};
use super::KernelSpec;
use crate::error::{Error, Result};
use crate::marginal::MarginalDist;

/// Score function `p'(x) / p(x)` of a 1-D density.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreFn {
    Normal {
        mu: f64,
        sd: f64,
    },
    /// Arbitrary score, e.g. of an unnormalized posterior. Not serializable.
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScoreFn {
    pub fn standard_normal() -> Self {
        ScoreFn::Normal { mu: 0.0, sd: 1.0 }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScoreFn::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScoreFn::Normal { mu, sd } => -(x - mu) / (sd * sd),
            ScoreFn::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for ScoreFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreFn::Normal { mu, sd } => write!(f, "Normal {{ mu: {mu}, sd: {sd} }}"),
            ScoreFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl PartialEq for ScoreFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ScoreFn::Normal { mu: a, sd: b }, ScoreFn::Normal { mu: c, sd: d }) => a == c && b == d,
            (ScoreFn::Custom(a), ScoreFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// A scalar kernel with its parameters resolved, ready for tight loops.
#[derive(Debug, Clone)]
pub(crate) enum ScalarKernel {
    Linear,
    Gaussian {
        inv_two_sigma2: f64,
        inv_sigma2: f64,
    },
    Sobolev {
        r: u32,
    },
    Durrande(Box<Durrande>),
    Stein {
        base: Box<ScalarKernel>,
        score: ScoreFn,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Durrande {
    base: ScalarKernel,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    denom: f64,
}

impl Durrande {
    fn new(base: ScalarKernel, marginal: &MarginalDist) -> Result<Self> {
        marginal.validate()?;
        let (nodes, weights) = marginal.integration_rule();
        for t in &nodes {
            base.check(*t)?;
        }
        let mut d = Durrande {
            base,
            nodes,
            weights,
            denom: 0.0,
        };
        let embeds: Vec<f64> = d.nodes.iter().map(|t| d.embed(*t)).collect();
        let denom: f64 = d.weights.iter().zip(&embeds).map(|(w, e)| w * e).sum();
        if !(denom > 1e-14) {
            return Err(Error::DegenerateKernel(format!(
                "mean embedding has squared norm {denom:e}; the base kernel has no zero-mean part"
            )));
        }
        // E k(t, t) before and after removing the mean-embedding direction
        let mut trace = 0.0;
        let mut trace0 = 0.0;
        for ((t, w), e) in d.nodes.iter().zip(&d.weights).zip(&embeds) {
            let ktt = d.base.value(*t, *t);
            trace += w * ktt;
            trace0 += w * (ktt - e * e / denom);
        }
        if trace0 <= 1e-10 * trace.abs().max(1e-300) {
            return Err(Error::DegenerateKernel(
                "the base RKHS lies in the span of its mean embedding, so the zero-mean kernel vanishes"
                    .into(),
            ));
        }
        d.denom = denom;
        Ok(d)
    }

    /// `\int k(x, t) dP(t)`.
    pub(crate) fn embed(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * self.base.value(x, *t))
            .sum()
    }

    pub(crate) fn value_with(&self, x: f64, ex: f64, y: f64, ey: f64) -> f64 {
        self.base.value(x, y) - ex * ey / self.denom
    }
}

impl ScalarKernel {
    pub(crate) fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            KernelSpec::Linear => ScalarKernel::Linear,
            KernelSpec::Gaussian { sigma } => ScalarKernel::Gaussian {
                inv_two_sigma2: 1.0 / (2.0 * sigma * sigma),
                inv_sigma2: 1.0 / (sigma * sigma),
            },
            KernelSpec::SobolevZeroMean { r } => {
                check_order(*r)?;
                ScalarKernel::Sobolev { r: *r }
            }
            KernelSpec::DurrandeZeroMean { base, marginal } => {
                let base = ScalarKernel::new(base)?;
                ScalarKernel::Durrande(Box::new(Durrande::new(base, marginal)?))
            }
            KernelSpec::SteinZeroMean { base, score } => {
                let base = match **base {
                    KernelSpec::Linear | KernelSpec::Gaussian { .. } => ScalarKernel::new(base)?,
                    _ => {
                        return Err(Error::Unsupported(format!(
                            "Stein construction needs a Linear or Gaussian base, got {}",
                            base.name()
                        )))
                    }
                };
                ScalarKernel::Stein {
                    base: Box::new(base),
                    score: score.clone(),
                }
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "{} is not a kernel on real numbers",
                    other.name()
                )))
            }
        })
    }

    /// Domain check for one argument.
    pub(crate) fn check(&self, x: f64) -> Result<()> {
        match self {
            ScalarKernel::Sobolev { .. } if !(0.0..=1.0).contains(&x) => Err(Error::Domain {
                value: x,
                domain: "[0, 1]",
            }),
            ScalarKernel::Durrande(d) => d.base.check(x),
            ScalarKernel::Stein { score, .. } if !score.eval(x).is_finite() => Err(Error::Domain {
                value: x,
                domain: "points with a finite score",
            }),
            _ if !x.is_finite() => Err(Error::Domain {
                value: x,
                domain: "finite reals",
            }),
            _ => Ok(()),
        }
    }

    /// Kernel value without domain checks.
    pub(crate) fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarKernel::Linear => x * y,
            ScalarKernel::Gaussian { inv_two_sigma2, .. } => {
                let d = x - y;
                (-d * d * inv_two_sigma2).exp()
            }
            ScalarKernel::Sobolev { r } => sobolev_unchecked(*r, x, y),
            ScalarKernel::Durrande(d) => d.value_with(x, d.embed(x), y, d.embed(y)),
            ScalarKernel::Stein { base, score } => stein_value(base, score.eval(x), x, score.eval(y), y),
        }
    }

    /// Per-point quantity reused across a Gram row (the mean embedding for
    /// Durrande kernels, the score for Stein kernels).
    pub(crate) fn point_cache(&self, x: f64) -> f64 {
        match self {
            ScalarKernel::Durrande(d) => d.embed(x),
            ScalarKernel::Stein { score, .. } => score.eval(x),
            _ => 0.0,
        }
    }

    /// Same value as [`ScalarKernel::value`], bit for bit, given the caches.
    pub(crate) fn value_cached(&self, x: f64, cx: f64, y: f64, cy: f64) -> f64 {
        match self {
            ScalarKernel::Durrande(d) => d.value_with(x, cx, y, cy),
            ScalarKernel::Stein { base, .. } => stein_value(base, cx, x, cy, y),
            _ => self.value(x, y),
        }
    }
}

// The two cross terms are added together first so that swapping the
// arguments reproduces the value exactly.
fn stein_value(base: &ScalarKernel, sx: f64, x: f64, sy: f64, y: f64) -> f64 {
    match base {
        ScalarKernel::Linear => {
            let cross = sx * x + sy * y;
            1.0 + cross + (sx * sy) * (x * y)
        }
        ScalarKernel::Gaussian {
            inv_two_sigma2,
            inv_sigma2,
        } => {
            let d = x - y;
            let k = (-d * d * inv_two_sigma2).exp();
            // dk/dy = g, dk/dx = -g
            let g = d * inv_sigma2 * k;
            let dxdy = (inv_sigma2 - d * d * inv_sigma2 * inv_sigma2) * k;
            let cross = sx * g + -(sy * g);
            dxdy + cross + (sx * sy) * k
        }
        _ => unreachable!("Stein base validated at construction"),
    }
}

/// Durrande zero-mean kernel `k(x, y) - e(x) e(y) / D` for a base kernel
/// and marginal law.
pub fn durrande_zero_mean(base: &KernelSpec, marginal: &MarginalDist, x: f64, x2: f64) -> Result<f64> {
    let k = ScalarKernel::new(&KernelSpec::DurrandeZeroMean {
        base: Box::new(base.clone()),
        marginal: marginal.clone(),
    })?;
    k.check(x)?;
    k.check(x2)?;
    Ok(k.value(x, x2))
}

/// Stein kernel built from a Linear or Gaussian base and a score function.
pub fn stein_zero_mean(base: &KernelSpec, score: &ScoreFn, x: f64, x2: f64) -> Result<f64> {
    let k = ScalarKernel::new(&KernelSpec::SteinZeroMean {
        base: Box::new(base.clone()),
        score: score.clone(),
    })?;
    k.check(x)?;
    k.check(x2)?;
    Ok(k.value(x, x2))
}
