use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimators::{InputSampler, ModelFn};
use crate::marginal::MarginalDist;
use crate::subset::ClosedValueTable;

pub const A: f64 = 7.0;
pub const B: f64 = 0.1;

/// `sin(x1) + a sin²(x2) + b x3⁴ sin(x1)`; a fourth coordinate is a dummy.
pub fn ishigami(x: &[f64]) -> Result<f64> {
    if x.len() != 3 && x.len() != 4 {
        return Err(Error::invalid(format!("Ishigami takes 3 or 4 inputs, got {}", x.len())));
    }
    for v in x {
        if !(-PI..=PI).contains(v) {
            return Err(Error::Domain {
                value: *v,
                domain: "[-pi, pi]",
            });
        }
    }
    let s2 = x[1].sin();
    Ok(x[0].sin() + A * s2 * s2 + B * x[2].powi(4) * x[0].sin())
}

pub fn dim(with_dummy: bool) -> usize {
    if with_dummy {
        4
    } else {
        3
    }
}

pub fn model(with_dummy: bool) -> ModelFn {
    ModelFn::scalar(dim(with_dummy), ishigami)
}

pub fn sampler(with_dummy: bool) -> InputSampler {
    InputSampler::independent(vec![MarginalDist::Uniform { a: -PI, b: PI }; dim(with_dummy)])
}

/// Analytic partial variances `(V1, V2, V13)` and the total variance.
pub fn variance_components() -> (f64, f64, f64, f64) {
    let pi4 = PI.powi(4);
    let v1 = 0.5 * (1.0 + B * pi4 / 5.0).powi(2);
    let v2 = A * A / 8.0;
    let v13 = B * B * pi4 * pi4 * (1.0 / 18.0 - 1.0 / 50.0);
    (v1, v2, v13, v1 + v2 + v13)
}

/// Exact closed Sobol values `Var E(Y | X_A)`.
pub fn closed_table(with_dummy: bool) -> ClosedValueTable {
    let (v1, v2, v13, var) = variance_components();
    ClosedValueTable::from_fn(dim(with_dummy), var, |s| {
        let mut c = 0.0;
        if s.contains(0) {
            c += v1;
        }
        if s.contains(1) {
            c += v2;
        }
        if s.contains(0) && s.contains(2) {
            c += v13;
        }
        c
    })
    .expect("dimension within limits")
}
