use kgsa::estimators::{double_loop_mmd, EstimatorConfig, HsicFlavor, HsicGrams, InputKernel, InputSampler, ModelFn};
use kgsa::experiments::{cross_agreement_run, categorical_run, ishigami_run, stochastic_kernel_run, stochastic_output_kernel};
use kgsa::rng::{child_seed, substream, Op};
use kgsa::shapley::{shapley_exact, shapley_permutation, ValueFunction, ValueKind};
use kgsa::testbed::{stochastic_sim, CategoricalSynthetic, DiscreteEnumerable, Quantity};
use kgsa::{gram, ClosedValueTable, KernelSpec, MarginalDist, OutputValue, SampleSet, Subset};
use rand::Rng;

fn unif() -> MarginalDist {
    MarginalDist::uniform(0.0, 1.0).unwrap()
}

fn sample(n: usize, seed: u64, f: impl Fn(&[f64], f64) -> f64) -> SampleSet {
    let mut rng = substream(seed, Op::Sample, 0, 0);
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
    let outputs = inputs
        .iter()
        .map(|x| OutputValue::scalar(f(x, rng.random::<f64>() - 0.5)))
        .collect();
    SampleSet::new(inputs, outputs).unwrap()
}

fn hsic_grams(s: &SampleSet, output: &KernelSpec) -> HsicGrams {
    let kernels = vec![InputKernel::sobolev(1, unif()); s.dim()];
    HsicGrams::new(s, &kernels, gram(output, &s.outputs).unwrap()).unwrap()
}

fn model_output(x: &[f64], noise: f64) -> f64 {
    (6.0 * x[0]).sin() + x[1] + 0.3 * noise
}

#[test]
fn hsic_u_and_v_gap_shrinks_like_one_over_n() {
    let sizes = [100usize, 200, 400, 800, 1600];
    let full = Subset::full(2);
    let mut points = Vec::new();
    for n in sizes {
        // average over a few samples so the fitted slope reflects the mean gap
        let gap: f64 = (0..4)
            .map(|r| {
                let g = hsic_grams(&sample(n, 100 + r, model_output), &KernelSpec::gaussian(0.5));
                (g.closed(full, HsicFlavor::U).unwrap() - g.closed(full, HsicFlavor::V).unwrap()).abs()
            })
            .sum::<f64>()
            / 4.0;
        points.push(((n as f64).ln(), gap.ln()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!(slope <= -0.9, "slope {slope}");
}

#[test]
fn density_weighted_hsic_tends_to_expected_mmd() {
    let xs = [0.0, 0.3, 0.6];
    let ps = [0.3, 0.3, 0.4];
    let support: Vec<Vec<(f64, f64)>> = vec![xs.iter().zip(&ps).map(|(x, p)| (*x, *p)).collect()];
    let model = DiscreteEnumerable::independent(&support, |x| {
        let c = x[0];
        vec![
            (OutputValue::scalar(c * 2.0), 0.5),
            (OutputValue::scalar(1.0 - c), 0.3),
            (OutputValue::scalar(c * c + 0.4), 0.2),
        ]
    })
    .unwrap();
    let spec = KernelSpec::gaussian(0.8);
    let target = model.enumerate(&Quantity::MmdClosed(&spec), Subset::singleton(0)).unwrap();
    let g = model.atom_output_gram(&spec).unwrap();
    let atoms: Vec<(f64, f64)> = model.atoms().map(|(x, p)| (x[0], p)).collect();
    let m = atoms.len();
    let row: Vec<f64> = (0..m).map(|s| (0..m).map(|t| atoms[t].1 * g[s][t]).sum()).collect();
    let all: f64 = (0..m).map(|s| atoms[s].1 * row[s]).sum();
    let hsic = |h: f64| {
        let mut v = 0.0;
        for (s, (xs, ps)) in atoms.iter().enumerate() {
            for (t, (xt, pt)) in atoms.iter().enumerate() {
                let k = (-(xs - xt).powi(2) / (2.0 * h * h)).exp() / (ps * pt).sqrt();
                v += ps * pt * k * (g[s][t] - row[s] - row[t] + all);
            }
        }
        v
    };
    let errors: Vec<f64> = [0.5, 0.2, 0.1, 0.05].iter().map(|h| (hsic(*h) - target).abs()).collect();
    assert!(target > 0.01, "target {target}");
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "errors {errors:?}");
    }
    assert!(errors[3] < 0.05 * target, "errors {errors:?}, target {target}");
}

#[test]
fn hsic_u_statistic_meets_the_concentration_bound() {
    // Sobolev r = 1 lies in [-1/3, 1/3]; (k + 1/3) * 3/2 lies in [0, 1] and
    // has HSIC equal to 3/2 times that of k.
    let mut grid_max: f64 = 0.0;
    for i in 0..=100 {
        for j in 0..=100 {
            let k = kgsa::kernel::sobolev_kernel(1, i as f64 / 100.0, j as f64 / 100.0).unwrap();
            grid_max = grid_max.max(k.abs());
        }
    }
    assert!(grid_max <= 1.0 / 3.0 + 1e-12);
    let scale = 1.5;
    let out = KernelSpec::gaussian(0.5);
    let a = Subset::singleton(0);
    let reference = hsic_grams(&sample(3000, 7, model_output), &out).closed(a, HsicFlavor::U).unwrap();
    let delta: f64 = 0.05;
    for n in [50usize, 200] {
        let bound = 8.0 * ((2.0 / delta).ln() / n as f64).sqrt();
        let reps = 100;
        let violations = (0..reps)
            .filter(|r| {
                let g = hsic_grams(&sample(n, 1000 + r, model_output), &out);
                scale * (g.closed(a, HsicFlavor::U).unwrap() - reference).abs() > bound
            })
            .count();
        assert!(violations as f64 <= delta * reps as f64, "n = {n}: {violations} violations");
    }
}

#[test]
fn permutation_shapley_is_unbiased() {
    let w = [1.0, 0.5, 0.2, 0.05];
    let d = w.len();
    let table = ClosedValueTable::from_fn(d, 0.0, |a| {
        let s: f64 = a.indices().iter().map(|l| w[*l]).sum();
        s.powf(1.5) + if a.contains(0) && a.contains(2) { 0.3 } else { 0.0 }
    })
    .unwrap();
    let val = ValueFunction::from_table(ValueKind::VarianceClosed, &table).unwrap();
    let exact = shapley_exact(&val).unwrap();
    let seeds = 200;
    let runs: Vec<Vec<f64>> = (0..seeds)
        .map(|r| shapley_permutation(&val, 50, child_seed(20_240_501, r)).unwrap().effects)
        .collect();
    for l in 0..d {
        let xs: Vec<f64> = runs.iter().map(|r| r[l]).collect();
        let mean = xs.iter().sum::<f64>() / seeds as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64).sqrt();
        let se = sd / (seeds as f64).sqrt();
        assert!((mean - exact.effects[l]).abs() <= 2.0 * se, "input {l}: {mean} vs {} (se {se})", exact.effects[l]);
    }
}

fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn stochastic_simulator_law_does_not_depend_on_the_stream() {
    for x in [[0.3, 0.6, 0.2, 0.8, 0.5], [0.9, 0.1, 0.7, 0.4, 0.0]] {
        let mut base = stochastic_sim(&x, 10_000, &mut substream(1, Op::Model, 0, 0)).unwrap();
        for (seed, row) in [(1, 1), (2, 0), (99, 17)] {
            let mut other = stochastic_sim(&x, 10_000, &mut substream(seed, Op::Model, 0, row)).unwrap();
            let ks = ks_two_sample(&mut base, &mut other);
            assert!(ks < 0.03, "{x:?} stream ({seed}, {row}): {ks}");
        }
    }
}

#[test]
fn double_loop_costs_n_plus_one_times_m_evaluations() {
    let model = ModelFn::scalar(3, |x| Ok(x[0] * x[1] + x[2]));
    let sampler = InputSampler::independent(vec![unif(); 3]);
    let mut cfg = EstimatorConfig::new(40, 3);
    cfg.m = 25;
    for a in [Subset::singleton(1), Subset::from_indices(&[0, 2])] {
        model.reset_count();
        double_loop_mmd(&model, &sampler, a, &KernelSpec::gaussian(1.0), &cfg).unwrap();
        assert_eq!(model.evaluations(), 41 * 25);
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = || {
        let ishigami = ishigami_run(300, 42, 1).unwrap();
        let cross = cross_agreement_run(300, 100, 20, 42, 2).unwrap();
        let cat = categorical_run(&CategoricalSynthetic::new(1).unwrap(), 200, 42, 0).unwrap();
        let spec = stochastic_output_kernel(20, 42).unwrap();
        let stoch = stochastic_kernel_run(60, 20, &spec, 42, 0).unwrap();
        format!("{ishigami:?}{cross:?}{cat:?}{stoch:?}")
    };
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    assert_eq!(one, four);
}
