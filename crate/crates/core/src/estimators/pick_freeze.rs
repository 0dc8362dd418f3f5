use super::{InputSampler, ModelFn};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, PointCache, PreparedKernel};
use crate::rng::{substream, Op};
use crate::subset::{first_total_report, IndexReport};
use crate::value::OutputValue;

/// Inputs of a pick-freeze design for input `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeDesign {
    pub x: Vec<Vec<f64>>,
    pub x_prime: Vec<Vec<f64>>,
    /// Column `l` from `x`, all other columns from `x_prime`.
    pub x_tilde: Vec<Vec<f64>>,
}

fn independent_only(sampler: &InputSampler) -> Result<()> {
    if sampler.is_independent() {
        Ok(())
    } else {
        Err(Error::Capability(
            "pick-freeze designs require independent inputs".into(),
        ))
    }
}

fn base_samples(sampler: &InputSampler, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = substream(seed, Op::PickFreeze, 0, 0);
    let x = sampler.sample(n, &mut rng);
    let x_prime = sampler.sample(n, &mut rng);
    (x, x_prime)
}

fn freeze(x: &[Vec<f64>], x_prime: &[Vec<f64>], l: usize) -> Vec<Vec<f64>> {
    x.iter()
        .zip(x_prime)
        .map(|(a, b)| {
            let mut row = b.clone();
            row[l] = a[l];
            row
        })
        .collect()
}

/// The design `(X, X', X^{~l})`. `X` and `X'` depend only on the sampler,
/// `n` and `seed`, so designs for different `l` share them.
pub fn pick_freeze_design(sampler: &InputSampler, l: usize, n: usize, seed: u64) -> Result<PickFreezeDesign> {
    independent_only(sampler)?;
    if l >= sampler.dim() {
        return Err(Error::invalid(format!("input {l} out of range")));
    }
    let (x, x_prime) = base_samples(sampler, n, seed);
    let x_tilde = freeze(&x, &x_prime, l);
    Ok(PickFreezeDesign { x, x_prime, x_tilde })
}

/// Model outputs on a shared design for every input: `(d + 2) n`
/// evaluations in total.
#[derive(Debug, Clone, PartialEq)]
pub struct PickFreezeOutputs {
    /// Inputs of the first block, paired with `y`.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<OutputValue>,
    pub y_prime: Vec<OutputValue>,
    pub y_tilde: Vec<Vec<OutputValue>>,
}

impl PickFreezeOutputs {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.y_tilde.len()
    }
}

pub fn pick_freeze_outputs(model: &ModelFn, sampler: &InputSampler, n: usize, seed: u64) -> Result<PickFreezeOutputs> {
    independent_only(sampler)?;
    if n == 0 {
        return Err(Error::invalid("pick-freeze needs n > 0"));
    }
    let (x, x_prime) = base_samples(sampler, n, seed);
    let y = model.eval_rows(&x, seed, 0, 0)?;
    let y_prime = model.eval_rows(&x_prime, seed, 1, 0)?;
    let y_tilde = (0..sampler.dim())
        .map(|l| model.eval_rows(&freeze(&x, &x_prime, l), seed, 2 + l as u32, 0))
        .collect::<Result<_>>()?;
    Ok(PickFreezeOutputs { x, y, y_prime, y_tilde })
}

#[derive(Clone, Copy)]
enum Col {
    Y,
    Prime,
    Tilde,
}

// The three displayed estimators for any kernel, summed in one fixed order
// so that the linear kernel and the Sobol formulas agree bit for bit.
fn closed_pair(n: usize, k: &impl Fn(Col, usize, Col, usize) -> Result<f64>) -> Result<(f64, f64)> {
    let mut first = 0.0;
    let mut complement = 0.0;
    for i in 0..n {
        let base = k(Col::Y, i, Col::Prime, i)?;
        first += k(Col::Y, i, Col::Tilde, i)? - base;
        complement += k(Col::Prime, i, Col::Tilde, i)? - base;
    }
    Ok((first / n as f64, complement / n as f64))
}

fn total(n: usize, k: &impl Fn(Col, usize, Col, usize) -> Result<f64>) -> Result<f64> {
    let mut diag = 0.0;
    let mut full = 0.0;
    for i in 0..n {
        diag += k(Col::Y, i, Col::Y, i)?;
        let mut row = 0.0;
        for j in 0..n {
            row += k(Col::Y, i, Col::Y, j)?;
        }
        full += row;
    }
    Ok(diag / n as f64 - full / (n * n) as f64)
}

fn check_l(out: &PickFreezeOutputs, l: usize) -> Result<()> {
    if l < out.dim() {
        Ok(())
    } else {
        Err(Error::invalid(format!("input {l} out of range")))
    }
}

fn scalar_closure<'a>(
    out: &'a PickFreezeOutputs,
    l: usize,
) -> Result<impl Fn(Col, usize, Col, usize) -> Result<f64> + 'a> {
    let get = |c: &[OutputValue]| -> Result<Vec<f64>> { crate::value::scalars(c) };
    let cols = [get(&out.y)?, get(&out.y_prime)?, get(&out.y_tilde[l])?];
    Ok(move |a: Col, i: usize, b: Col, j: usize| Ok(cols[a as usize][i] * cols[b as usize][j]))
}

/// Saltelli estimators `(V_l, V_{-l}, V)` of a scalar output:
/// `V_l = (1/n) sum y (y~ - y')`, `V_{-l} = (1/n) sum y' y~ - y y'`,
/// `V = mean(y²) - mean over pairs of y_i y_j`.
pub fn saltelli_sobol(out: &PickFreezeOutputs, l: usize) -> Result<(f64, f64, f64)> {
    check_l(out, l)?;
    let k = scalar_closure(out, l)?;
    let (a, b) = closed_pair(out.n(), &k)?;
    Ok((a, b, total(out.n(), &k)?))
}

fn kernel_closure<'a>(
    kern: &'a PreparedKernel,
    out: &'a PickFreezeOutputs,
    l: usize,
) -> Result<impl Fn(Col, usize, Col, usize) -> Result<f64> + 'a> {
    let cols = [&out.y, &out.y_prime, &out.y_tilde[l]];
    let caches: [Vec<PointCache>; 3] = [kern.caches(cols[0])?, kern.caches(cols[1])?, kern.caches(cols[2])?];
    Ok(move |a: Col, i: usize, b: Col, j: usize| {
        let (a, b) = (a as usize, b as usize);
        kern.eval_cached(&cols[a][i], &caches[a][i], &cols[b][j], &caches[b][j])
    })
}

/// Pick-freeze MMD estimators `(M²_l, M²_{-l}, M²_tot)`.
pub fn pick_freeze_mmd(out: &PickFreezeOutputs, l: usize, spec: &KernelSpec) -> Result<(f64, f64, f64)> {
    check_l(out, l)?;
    let kern = PreparedKernel::new(spec)?;
    let k = kernel_closure(&kern, out, l)?;
    let (a, b) = closed_pair(out.n(), &k)?;
    Ok((a, b, total(out.n(), &k)?))
}

/// First-order and total Sobol indices of every input.
pub fn saltelli_report(out: &PickFreezeOutputs) -> Result<IndexReport> {
    let mut first = Vec::new();
    let mut complement = Vec::new();
    for l in 0..out.dim() {
        let k = scalar_closure(out, l)?;
        let (a, b) = closed_pair(out.n(), &k)?;
        first.push(a);
        complement.push(b);
    }
    let v = total(out.n(), &scalar_closure(out, 0)?)?;
    first_total_report(&first, &complement, v)
}

/// First-order and total MMD indices of every input.
pub fn pick_freeze_mmd_report(out: &PickFreezeOutputs, spec: &KernelSpec) -> Result<IndexReport> {
    let kern = PreparedKernel::new(spec)?;
    let mut first = Vec::new();
    let mut complement = Vec::new();
    for l in 0..out.dim() {
        let k = kernel_closure(&kern, out, l)?;
        let (a, b) = closed_pair(out.n(), &k)?;
        first.push(a);
        complement.push(b);
    }
    let m = total(out.n(), &kernel_closure(&kern, out, 0)?)?;
    first_total_report(&first, &complement, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginal::MarginalDist;

    fn unif(d: usize) -> InputSampler {
        InputSampler::independent(vec![MarginalDist::uniform(0.0, 1.0).unwrap(); d])
    }

    #[test]
    fn design_columns() {
        let s = unif(2);
        let d = pick_freeze_design(&s, 0, 50, 3).unwrap();
        for i in 0..50 {
            assert_eq!(d.x_tilde[i][0], d.x[i][0]);
            assert_eq!(d.x_tilde[i][1], d.x_prime[i][1]);
        }
        let d1 = pick_freeze_design(&s, 1, 50, 3).unwrap();
        assert_eq!(d.x, d1.x);
        assert_eq!(d.x_prime, d1.x_prime);
    }

    #[test]
    fn dependent_sampler_is_rejected() {
        let m = vec![MarginalDist::uniform(0.0, 1.0).unwrap(); 2];
        let s = InputSampler::gaussian_copula(vec![vec![1.0, 0.5], vec![0.5, 1.0]], m).unwrap();
        assert!(matches!(pick_freeze_design(&s, 0, 10, 1), Err(Error::Capability(_))));
    }

    #[test]
    fn evaluation_budget_is_d_plus_two_times_n() {
        let model = ModelFn::scalar(3, |x| Ok(x[0] + x[1] * x[2]));
        pick_freeze_outputs(&model, &unif(3), 100, 1).unwrap();
        assert_eq!(model.evaluations(), 5 * 100);
    }

    #[test]
    fn linear_kernel_matches_saltelli_bit_for_bit() {
        let model = ModelFn::scalar(3, |x| Ok(x[0].sin() + 3.0 * x[1] * x[2]));
        let out = pick_freeze_outputs(&model, &unif(3), 300, 2).unwrap();
        for l in 0..3 {
            assert_eq!(saltelli_sobol(&out, l).unwrap(), pick_freeze_mmd(&out, l, &KernelSpec::Linear).unwrap());
        }
    }

    #[test]
    fn single_input_model_has_unit_index() {
        let model = ModelFn::scalar(1, |x| Ok(x[0]));
        let out = pick_freeze_outputs(&model, &unif(1), 2000, 5).unwrap();
        let (vl, _, v) = saltelli_sobol(&out, 0).unwrap();
        assert!((vl / v - 1.0).abs() < 0.05);
    }

    #[test]
    fn constant_output() {
        let model = ModelFn::scalar(2, |_| Ok(1.5));
        let out = pick_freeze_outputs(&model, &unif(2), 50, 5).unwrap();
        let (a, b, v) = saltelli_sobol(&out, 0).unwrap();
        assert_eq!((a, b, v), (0.0, 0.0, 0.0));
        assert!(matches!(saltelli_report(&out), Err(Error::DegenerateOutput(_))));
        let (a, b, m) = pick_freeze_mmd(&out, 1, &KernelSpec::gaussian(1.0)).unwrap();
        assert_eq!((a, b, m), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reports_cover_every_input() {
        let model = ModelFn::scalar(2, |x| Ok(x[0] + 0.1 * x[1]));
        let out = pick_freeze_outputs(&model, &unif(2), 2000, 8).unwrap();
        let r = saltelli_report(&out).unwrap();
        assert_eq!(r.first_order.len(), 2);
        assert!(r.first_order[0] > 0.9);
        let m = pick_freeze_mmd_report(&out, &KernelSpec::gaussian(0.3)).unwrap();
        assert!(m.first_order[0] > m.first_order[1]);
    }
}
