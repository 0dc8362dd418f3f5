use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::{InputSampler, ModelFn};
use crate::marginal::MarginalDist;
use crate::value::OutputValue;

pub const DIM: usize = 5;
pub const DEFAULT_INNER_SAMPLE: usize = 100;

/// One draw of `(x1 + 2 x2 + U1) sin(3 x3 - 4 x4 + N) + U2 + 5 x5 B + sum i x_i`
/// with `U1 ~ U(0,1)`, `U2 ~ U(1,2)`, `N ~ N(0,1)`, `B ~ Bernoulli(1/2)`,
/// drawn in that order.
fn draw<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = 1.0 + rng.random::<f64>();
    let n: f64 = rng.sample(StandardNormal);
    let b = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
    let offset: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    (x[0] + 2.0 * x[1] + u1) * (3.0 * x[2] - 4.0 * x[3] + n).sin() + u2 + 5.0 * x[4] * b + offset
}

fn check(x: &[f64]) -> Result<()> {
    if x.len() != DIM {
        return Err(Error::invalid(format!("stochastic simulator takes 5 inputs, got {}", x.len())));
    }
    for v in x {
        if !(0.0..=1.0).contains(v) {
            return Err(Error::Domain {
                value: *v,
                domain: "[0, 1]",
            });
        }
    }
    Ok(())
}

/// `inner_sample` draws of the simulator at `x`.
pub fn stochastic_sim<R: Rng + ?Sized>(x: &[f64], inner_sample: usize, rng: &mut R) -> Result<Vec<f64>> {
    check(x)?;
    if inner_sample == 0 {
        return Err(Error::invalid("inner_sample must be positive"));
    }
    Ok((0..inner_sample).map(|_| draw(x, rng)).collect())
}

/// Output is the bag of inner draws.
pub fn model(inner_sample: usize) -> ModelFn {
    ModelFn::new(DIM, move |x, rng| OutputValue::dist(stochastic_sim(x, inner_sample, rng)?))
}

/// Output is the mean of the inner draws.
pub fn mean_model(inner_sample: usize) -> ModelFn {
    ModelFn::new(DIM, move |x, rng| {
        let v = stochastic_sim(x, inner_sample, rng)?;
        Ok(OutputValue::scalar(v.iter().sum::<f64>() / v.len() as f64))
    })
}

/// Output is the standard deviation of the inner draws.
pub fn sd_model(inner_sample: usize) -> ModelFn {
    ModelFn::new(DIM, move |x, rng| {
        let v = stochastic_sim(x, inner_sample, rng)?;
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / v.len() as f64;
        Ok(OutputValue::scalar(var.sqrt()))
    })
}

pub fn sampler() -> InputSampler {
    InputSampler::independent(vec![MarginalDist::Uniform { a: 0.0, b: 1.0 }; DIM])
}

/// Exact conditional mean `E(Y | x)`.
pub fn conditional_mean(x: &[f64]) -> Result<f64> {
    check(x)?;
    let offset: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    // E sin(c + N) = e^{-1/2} sin(c)
    Ok((x[0] + 2.0 * x[1] + 0.5) * (-0.5f64).exp() * (3.0 * x[2] - 4.0 * x[3]).sin() + 1.5 + 2.5 * x[4] + offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Op};

    #[test]
    fn zero_input_has_no_offset() {
        let mut rng = substream(1, Op::Model, 0, 0);
        let v = stochastic_sim(&[0.0; 5], 2000, &mut rng).unwrap();
        // (U1) sin(N) + U2 + 0: mean 1.5 since E U1 sin N = 0
        let m = v.iter().sum::<f64>() / v.len() as f64;
        assert!((m - 1.5).abs() < 0.05, "{m}");
        assert!(v.iter().all(|y| (0.0..=3.0).contains(y)));
    }

    #[test]
    fn mean_matches_analytic_value() {
        let x = [0.2, 0.7, 0.4, 0.9, 0.6];
        let mut rng = substream(2, Op::Model, 0, 0);
        let v = stochastic_sim(&x, 100_000, &mut rng).unwrap();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        assert!((m - conditional_mean(&x).unwrap()).abs() < 0.02);
    }

    #[test]
    fn shifting_x5_moves_each_draw_by_5_delta_b_plus_1() {
        let x = [0.2, 0.7, 0.4, 0.9, 0.3];
        let mut y = x;
        let delta = 0.25;
        y[4] += delta;
        let a = stochastic_sim(&x, 500, &mut substream(3, Op::Model, 0, 0)).unwrap();
        let b = stochastic_sim(&y, 500, &mut substream(3, Op::Model, 0, 0)).unwrap();
        for (p, q) in a.iter().zip(&b) {
            let shift = q - p;
            // shift is 5 delta B + 5 delta with B in {0, 1}
            assert!(
                (shift - 5.0 * delta).abs() < 1e-12 || (shift - 10.0 * delta).abs() < 1e-12,
                "{shift}"
            );
        }
    }

    #[test]
    fn domain_checks() {
        let mut rng = substream(4, Op::Model, 0, 0);
        assert!(stochastic_sim(&[1.5, 0.0, 0.0, 0.0, 0.0], 10, &mut rng).is_err());
        assert!(stochastic_sim(&[0.0; 4], 10, &mut rng).is_err());
    }
}
