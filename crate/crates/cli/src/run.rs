//! Command execution: replicated estimation, result tables and files.

use std::collections::BTreeMap;
use std::path::Path;

use kgsa::estimators::{
    double_loop_mmd, knn_closed_value_gram, knn_complementary_value_gram, pick_freeze_mmd_report, pick_freeze_outputs,
    EstimatorConfig, HsicFlavor, HsicGrams, InputKernel, InputSampler, ModelFn, MAX_TABLE_DIM,
};
use kgsa::experiments::{
    categorical_run, hsic_first_order, ishigami_run, rank_first_order, replicate, sir_output_kernels, sir_run,
    stochastic_kernel_run, stochastic_output_kernel, stochastic_sobol_run, summarize, Summary, PRELIMINARY_SAMPLE,
};
use kgsa::rng::{child_seed, substream, Op};
use kgsa::shapley::{hsic_shapley, mmd_shapley, MmdShapleyEstimator, ShapleyData, ShapleyReport};
use kgsa::subset::normalize;
use kgsa::testbed::{categorical, ishigami, sir, stochastic, CategoricalSynthetic};
use kgsa::{gram, KernelSpec, MarginalDist, SampleSet, Subset};
use rand::Rng;
use serde::Serialize;

use crate::config::{Cli, Command, CommonArgs, EstimatorId, Experiment, RunConfig, Settings, Source, VerifyArgs};
use crate::csvio::ingest_csv;
use crate::error::{CliError, CliResult};
use crate::parse::{parse_kernel, parse_marginal, resolve_input_kernel, resolve_output_kernel, KernelChoice};

/// Per-replicate values, one column per index.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Table {
            name: name.to_string(),
            columns,
            rows,
        }
    }

    fn numbered(name: &str, prefixes: &[&str], d: usize, rows: Vec<Vec<f64>>) -> Self {
        let columns = prefixes
            .iter()
            .flat_map(|p| (1..=d).map(move |l| format!("{p}_{l}")))
            .collect();
        Table::new(name, columns, rows)
    }

    fn summary(&self) -> CliResult<Vec<(String, Summary)>> {
        self.columns
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let col: Vec<f64> = self.rows.iter().map(|r| r[c]).collect();
                Ok((format!("{}.{name}", self.name), summarize(&col)?))
            })
            .collect()
    }

    fn to_csv(&self, hash: &str) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(f64::to_string))?;
        }
        let body = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(format!("# config_hash: {hash}\n{}", String::from_utf8(body).expect("utf-8")))
    }
}

#[derive(Serialize)]
struct ResultFile<'a> {
    config_hash: &'a str,
    seed: u64,
    config: &'a RunConfig,
    replicates: serde_json::Value,
    summary: BTreeMap<String, Summary>,
    eval_counts: BTreeMap<String, u64>,
}

/// Files produced by one command, before they are written.
#[derive(Debug)]
pub struct Outcome {
    pub hash: String,
    pub files: Vec<(String, String)>,
    /// Human-readable digest printed on stdout.
    pub digest: String,
}

fn outcome(
    stem: &str,
    cfg: &RunConfig,
    replicates: serde_json::Value,
    tables: Vec<Table>,
    extra: Vec<(String, String)>,
    eval_counts: BTreeMap<String, u64>,
) -> CliResult<Outcome> {
    let hash = cfg.hash();
    let mut summary = BTreeMap::new();
    let mut digest = format!("config {hash}\n");
    let mut files = Vec::new();
    for t in &tables {
        for (key, s) in t.summary()? {
            digest.push_str(&format!("{key:<24} mean {:>10.4}  sd {:>8.4}  median {:>10.4}\n", s.mean, s.std, s.median));
            summary.insert(key, s);
        }
        files.push((format!("{stem}_{}.csv", t.name), t.to_csv(&hash)?));
    }
    for (name, body) in extra {
        files.push((name, format!("# config_hash: {hash}\n{body}")));
    }
    let json = ResultFile {
        config_hash: &hash,
        seed: cfg.seed,
        config: cfg,
        replicates,
        summary,
        eval_counts,
    };
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    files.insert(0, (format!("{stem}.json"), text));
    Ok(Outcome { hash, files, digest })
}

/// Config hash recorded in an existing result file, if any.
fn recorded_hash(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text).ok()?;
        v.get("config_hash")?.as_str().map(str::to_string)
    } else {
        text.lines()
            .next()?
            .strip_prefix("# config_hash: ")
            .map(|h| h.trim().to_string())
    }
}

/// Write every file, refusing to replace results of another configuration
/// unless `force` is set. Nothing is written when any file is refused.
pub fn write_outcome(dir: &Path, outcome: &Outcome, force: bool) -> CliResult<()> {
    let hash = outcome.hash.as_str();
    if !force {
        for (name, _) in &outcome.files {
            let path = dir.join(name);
            if path.exists() {
                let found = recorded_hash(&path).unwrap_or_else(|| "unknown".into());
                if found != hash {
                    return Err(CliError::Overwrite {
                        path: path.display().to_string(),
                        found,
                        expected: hash.to_string(),
                    });
                }
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, body) in &outcome.files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Model and input law addressed by name.
pub fn named_model(name: &str) -> CliResult<(ModelFn, InputSampler)> {
    let inner = stochastic::DEFAULT_INNER_SAMPLE;
    let (base, arg) = match name.split_once(':') {
        Some((b, a)) => (b, Some(a)),
        None => (name, None),
    };
    let no_arg = || match arg {
        None => Ok(()),
        Some(a) => Err(CliError::usage(format!("model `{base}` takes no argument, got `{a}`"))),
    };
    Ok(match base {
        "ishigami" | "ishigami-dummy" => {
            no_arg()?;
            let dummy = base == "ishigami-dummy";
            (ishigami::model(dummy), ishigami::sampler(dummy))
        }
        "stochastic" => {
            no_arg()?;
            (stochastic::model(inner), stochastic::sampler())
        }
        "stochastic-mean" => {
            no_arg()?;
            (stochastic::mean_model(inner), stochastic::sampler())
        }
        "sir-i" | "sir-r" => {
            no_arg()?;
            let c = if base == "sir-i" { sir::I } else { sir::R };
            (sir::model(c, sir::SirConfig::default())?, sir::sampler())
        }
        "categorical" => {
            let m = categorical_model(arg)?;
            (m.model(), m.sampler()?)
        }
        other => return Err(CliError::usage(format!("unknown model `{other}`"))),
    })
}

fn categorical_model(arg: Option<&str>) -> CliResult<CategoricalSynthetic> {
    let dominant = match arg {
        None => 2,
        Some(a) => a
            .parse()
            .map_err(|_| CliError::usage(format!("categorical dominant input `{a}` is not an index")))?,
    };
    Ok(CategoricalSynthetic::new(dominant)?)
}

enum Data {
    Sample(SampleSet),
    Model { model: ModelFn, sampler: InputSampler },
}

fn load(cfg: &RunConfig) -> CliResult<Data> {
    match &cfg.source {
        Source::Data { path, schema, .. } => Ok(Data::Sample(ingest_csv(Path::new(path), schema)?)),
        Source::Model { name } => {
            let (model, sampler) = named_model(name)?;
            Ok(Data::Model { model, sampler })
        }
        Source::None => Err(CliError::usage("give a sample file with --data or a model with --model")),
    }
}

fn sample_model(model: &ModelFn, sampler: &InputSampler, n: usize, seed: u64) -> CliResult<SampleSet> {
    let mut rng = substream(seed, Op::Sample, 0, 0);
    let rows = sampler.sample(n, &mut rng);
    let outputs = model.eval_rows(&rows, seed, 0, 0)?;
    Ok(SampleSet::new(rows, outputs)?)
}

/// Given data for replicate `r`: the file itself for a single replicate,
/// bootstrap resamples otherwise; fresh model draws for a model.
fn replicate_sample(data: &Data, cfg: &RunConfig, r: u64) -> CliResult<SampleSet> {
    match data {
        Data::Sample(s) if cfg.reps == 1 => Ok(s.clone()),
        Data::Sample(s) => {
            let mut rng = substream(cfg.seed, Op::Bootstrap, 0, r);
            let idx: Vec<usize> = (0..s.len()).map(|_| rng.random_range(0..s.len())).collect();
            let inputs = idx.iter().map(|i| s.inputs[*i].clone()).collect();
            let outputs = idx.iter().map(|i| s.outputs[*i].clone()).collect();
            Ok(SampleSet::new(inputs, outputs)?.with_names(s.input_names.clone())?)
        }
        Data::Model { model, sampler } => sample_model(model, sampler, cfg.n, child_seed(cfg.seed, r)),
    }
}

fn marginals(data: &Data, sample: &SampleSet) -> CliResult<Vec<MarginalDist>> {
    match data {
        Data::Model { sampler, .. } => Ok(sampler.marginals().to_vec()),
        Data::Sample(_) => (0..sample.dim())
            .map(|l| Ok(MarginalDist::empirical(sample.column(l))?))
            .collect(),
    }
}

struct Ctx {
    cfg: RunConfig,
    data: Data,
    kernel_out: Option<KernelChoice>,
    kernel_in: Option<KernelChoice>,
}

impl Ctx {
    fn new(cfg: RunConfig) -> CliResult<Self> {
        let kernel_out = cfg.kernel_out.as_deref().map(parse_kernel).transpose()?;
        let kernel_in = cfg.kernel_in.as_deref().map(parse_kernel).transpose()?;
        let data = load(&cfg)?;
        Ok(Ctx {
            cfg,
            data,
            kernel_out,
            kernel_in,
        })
    }

    fn estimator_config(&self, n: usize, seed: u64) -> EstimatorConfig {
        let mut e = EstimatorConfig::new(n, seed);
        e.m = self.cfg.m;
        e.n_a = self.cfg.n_a.min(n);
        e.n_i = self.cfg.n_i;
        e
    }

    fn input_kernels(&self, sample: &SampleSet) -> CliResult<Vec<InputKernel>> {
        marginals(&self.data, sample)?
            .iter()
            .map(|m| resolve_input_kernel(self.kernel_in.as_ref(), m))
            .collect()
    }

    fn model(&self, what: &str) -> CliResult<(&ModelFn, &InputSampler)> {
        match &self.data {
            Data::Model { model, sampler } => Ok((model, sampler)),
            Data::Sample(_) => Err(CliError::usage(format!("the {what} estimator needs --model"))),
        }
    }

    fn evaluations(&self) -> u64 {
        match &self.data {
            Data::Model { model, .. } => model.evaluations(),
            Data::Sample(_) => 0,
        }
    }
}

fn flavor(e: EstimatorId) -> HsicFlavor {
    if e == EstimatorId::HsicU {
        HsicFlavor::U
    } else {
        HsicFlavor::V
    }
}

/// First-order and, when the estimator provides them, total indices.
#[derive(Debug, Clone, Serialize)]
pub struct Indices {
    pub first_order: Vec<f64>,
    pub total: Option<Vec<f64>>,
    pub kernel: KernelSpec,
}

fn estimate_once(ctx: &Ctx, est: EstimatorId, r: u64) -> CliResult<Indices> {
    let s = child_seed(ctx.cfg.seed, r);
    if est == EstimatorId::PickFreeze {
        let (model, sampler) = ctx.model("pick-freeze")?;
        let out = pick_freeze_outputs(model, sampler, ctx.cfg.n, s)?;
        let kernel = resolve_output_kernel(ctx.kernel_out.as_ref(), &out.y)?;
        let rep = pick_freeze_mmd_report(&out, &kernel)?;
        return Ok(Indices {
            first_order: rep.first_order,
            total: Some(rep.total),
            kernel,
        });
    }
    let sample = replicate_sample(&ctx.data, &ctx.cfg, r)?;
    let kernel = resolve_output_kernel(ctx.kernel_out.as_ref(), &sample.outputs)?;
    let g = gram(&kernel, &sample.outputs)?;
    let d = sample.dim();
    let tot = g.total_mmd();
    let ratio = |v: f64| -> CliResult<f64> {
        if tot > 0.0 {
            Ok(v / tot)
        } else {
            Err(kgsa::Error::DegenerateOutput(format!("total MMD² is {tot}")).into())
        }
    };
    let (first_order, total) = match est {
        EstimatorId::Rank => (rank_first_order(&sample, &g)?, None),
        EstimatorId::Knn => {
            let e = ctx.estimator_config(sample.len(), s);
            let mut first = Vec::new();
            let mut total = Vec::new();
            for l in 0..d {
                let a = Subset::singleton(l);
                first.push(ratio(knn_closed_value_gram(&g, &sample.inputs, a, &e)?)?);
                total.push(ratio(knn_complementary_value_gram(&g, &sample.inputs, a, &e)?)?);
            }
            (first, Some(total))
        }
        EstimatorId::HsicU | EstimatorId::HsicV => {
            let grams = HsicGrams::new(&sample, &ctx.input_kernels(&sample)?, g)?;
            if d <= MAX_TABLE_DIM {
                let rep = normalize(&grams.table(flavor(est))?)?;
                (rep.first_order, Some(rep.total))
            } else {
                (hsic_first_order(&grams, flavor(est))?, None)
            }
        }
        EstimatorId::DoubleLoop => {
            let (model, sampler) = ctx.model("double-loop")?;
            let mut e = EstimatorConfig::new(ctx.cfg.n, s);
            e.m = ctx.cfg.m;
            let full = Subset::full(d);
            let mut first = Vec::new();
            let mut total = Vec::new();
            for l in 0..d {
                let one = double_loop_mmd(model, sampler, Subset::singleton(l), &kernel, &e)?;
                let rest = double_loop_mmd(model, sampler, full.without(l), &kernel, &e)?;
                first.push(ratio(one)?);
                total.push(1.0 - ratio(rest)?);
            }
            (first, Some(total))
        }
        EstimatorId::PickFreeze => unreachable!("handled above"),
    };
    Ok(Indices {
        first_order,
        total,
        kernel,
    })
}

fn estimate(ctx: &Ctx) -> CliResult<Outcome> {
    let est = ctx.cfg.estimator.unwrap_or(match ctx.data {
        Data::Sample(_) => EstimatorId::Knn,
        Data::Model { .. } => EstimatorId::PickFreeze,
    });
    let runs = replicate(ctx.cfg.reps, |r| estimate_once(ctx, est, r).map_err(kgsa_error))
        .map_err(CliError::from)?;
    let d = runs[0].first_order.len();
    let with_total = runs.iter().all(|r| r.total.is_some());
    let rows = runs
        .iter()
        .map(|r| {
            let mut row = r.first_order.clone();
            if with_total {
                row.extend(r.total.as_ref().expect("checked"));
            }
            row
        })
        .collect();
    let prefixes: &[&str] = if with_total { &["S", "ST"] } else { &["S"] };
    let table = Table::numbered("indices", prefixes, d, rows);
    let counts = BTreeMap::from([("model".to_string(), ctx.evaluations())]);
    outcome("estimate", &ctx.cfg, serde_json::to_value(&runs)?, vec![table], Vec::new(), counts)
}

// `replicate` runs closures returning the library error; CLI errors are
// carried through as their message.
fn kgsa_error(e: CliError) -> kgsa::Error {
    match e {
        CliError::Kgsa(e) => e,
        other => kgsa::Error::InvalidParameter(other.to_string()),
    }
}

fn shapley_once(ctx: &Ctx, est: EstimatorId, r: u64) -> CliResult<ShapleyReport> {
    let s = child_seed(ctx.cfg.seed, r);
    let sample = replicate_sample(&ctx.data, &ctx.cfg, r)?;
    let kernel = resolve_output_kernel(ctx.kernel_out.as_ref(), &sample.outputs)?;
    let e = ctx.estimator_config(sample.len(), s);
    Ok(match est {
        EstimatorId::Knn => {
            let g = gram(&kernel, &sample.outputs)?;
            mmd_shapley(
                ShapleyData::Sample {
                    sample: &sample,
                    gram: &g,
                },
                &kernel,
                &e,
                MmdShapleyEstimator::Knn,
            )?
        }
        EstimatorId::DoubleLoop => {
            let (model, sampler) = ctx.model("double-loop")?;
            mmd_shapley(ShapleyData::Model { model, sampler }, &kernel, &e, MmdShapleyEstimator::DoubleLoop)?
        }
        EstimatorId::HsicU | EstimatorId::HsicV => {
            let g = gram(&kernel, &sample.outputs)?;
            hsic_shapley(&sample, &ctx.input_kernels(&sample)?, g, flavor(est), &e)?
        }
        other => {
            return Err(CliError::usage(format!(
                "Shapley effects use the knn, double-loop, hsic-u or hsic-v estimator, not {other:?}"
            )))
        }
    })
}

fn shapley(ctx: &Ctx) -> CliResult<Outcome> {
    let est = ctx.cfg.estimator.unwrap_or(EstimatorId::Knn);
    let runs = replicate(ctx.cfg.reps, |r| shapley_once(ctx, est, r).map_err(kgsa_error)).map_err(CliError::from)?;
    let d = runs[0].effects.len();
    let rows = runs.iter().map(|r| r.effects.clone()).collect();
    let table = Table::numbered("effects", &["Sh"], d, rows);
    let counts = BTreeMap::from([("model".to_string(), ctx.evaluations())]);
    outcome("shapley", &ctx.cfg, serde_json::to_value(&runs)?, vec![table], Vec::new(), counts)
}

fn counts(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn reproduce(experiment: Experiment, cfg: &RunConfig, model_arg: Option<&str>) -> CliResult<Outcome> {
    let (n, reps, seed) = (cfg.n, cfg.reps, cfg.seed);
    match experiment {
        Experiment::Ishigami => {
            let runs = replicate(reps, |r| ishigami_run(n, seed, r))?;
            let d = ishigami::dim(true);
            let sobol = runs.iter().map(|r| [r.sobol.first_order.clone(), r.sobol.total.clone()].concat());
            let mmd = runs.iter().map(|r| [r.mmd.first_order.clone(), r.mmd.total.clone()].concat());
            let hsic = runs.iter().map(|r| r.hsic_first.clone());
            let tables = vec![
                Table::numbered("sobol", &["S", "ST"], d, sobol.collect()),
                Table::numbered("mmd", &["S_MMD", "ST_MMD"], d, mmd.collect()),
                Table::numbered("hsic", &["S_HSIC"], d, hsic.collect()),
            ];
            let evals = runs.iter().map(|r| r.evaluations).sum();
            outcome("ishigami", cfg, serde_json::to_value(&runs)?, tables, Vec::new(), counts(&[("model", evals)]))
        }
        Experiment::Stochastic => {
            let inner = stochastic::DEFAULT_INNER_SAMPLE;
            let m = cfg.m;
            let sobol = replicate(reps, |r| stochastic_sobol_run(n, inner, seed, r))?;
            let spec = stochastic_output_kernel(inner, seed)?;
            let kern = replicate(reps, |r| stochastic_kernel_run(m, inner, &spec, seed, r))?;
            let d = stochastic::DIM;
            let tables = vec![
                Table::numbered(
                    "sobol",
                    &["S", "ST"],
                    d,
                    sobol.iter().map(|r| [r.first_order.clone(), r.total.clone()].concat()).collect(),
                ),
                Table::numbered("mmd", &["S_MMD"], d, kern.iter().map(|r| r.mmd.clone()).collect()),
                Table::numbered("hsic", &["S_HSIC"], d, kern.iter().map(|r| r.hsic.clone()).collect()),
            ];
            let replicates = serde_json::json!({ "output_kernel": spec, "sobol": sobol, "kernel": kern });
            let (reps, d, n, m) = (reps as u64, d as u64, n as u64, m as u64);
            let evals = counts(&[
                ("sobol_model", reps * (d + 2) * n),
                ("kernel_model", reps * m + PRELIMINARY_SAMPLE as u64),
            ]);
            outcome("stochastic", cfg, replicates, tables, Vec::new(), evals)
        }
        Experiment::Sir => {
            let sc = sir::SirConfig::default();
            let kernels = sir_output_kernels(&sc, seed)?;
            let runs = replicate(reps, |r| sir_run(n, &sc, &kernels, seed, r))?;
            let d = sir::DIM;
            let tables = vec![
                Table::numbered("hsic_i", &["S_HSIC"], d, runs.iter().map(|r| r.hsic_i.clone()).collect()),
                Table::numbered("hsic_r", &["S_HSIC"], d, runs.iter().map(|r| r.hsic_r.clone()).collect()),
            ];
            let replicates =
                serde_json::json!({ "inputs": sir::INPUT_NAMES, "output_kernels": kernels, "runs": runs });
            let curves = ("sir_curves.csv".to_string(), sir_curve_csv(&sc)?);
            let evals = counts(&[("model", (reps * n + PRELIMINARY_SAMPLE) as u64)]);
            outcome("sir", cfg, replicates, tables, vec![curves], evals)
        }
        Experiment::Categorical => {
            let arg = match model_arg {
                None => None,
                Some(m) => match m.split_once(':') {
                    Some(("categorical", a)) => Some(a),
                    None if m == "categorical" => None,
                    _ => return Err(CliError::usage("reproduce categorical accepts --model categorical[:dominant]")),
                },
            };
            let model = categorical_model(arg)?;
            let runs = replicate(reps, |r| categorical_run(&model, n, seed, r))?;
            let d = categorical::DIM;
            let tables = vec![
                Table::numbered("mmd_shapley", &["Sh"], d, runs.iter().map(|r| r.mmd.effects.clone()).collect()),
                Table::numbered("hsic_shapley", &["Sh"], d, runs.iter().map(|r| r.hsic.effects.clone()).collect()),
            ];
            let replicates = serde_json::json!({ "model": model, "runs": runs });
            let evals = counts(&[("model", (reps * n) as u64)]);
            outcome("categorical", cfg, replicates, tables, Vec::new(), evals)
        }
    }
}

/// `time, I/S0, R/S0` at the middle of the input ranges.
fn sir_curve_csv(sc: &sir::SirConfig) -> CliResult<String> {
    let traj = sir::sir_simulate(&sir::SirParams::midrange(), sc.dt, sc.horizon)?;
    let stride = (sc.output_step / sc.dt).round().max(1.0) as usize;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "I_over_S0", "R_over_S0"])?;
    for (t, s) in traj.times.iter().zip(&traj.states).step_by(stride) {
        w.write_record([t.to_string(), s[sir::I].to_string(), s[sir::R].to_string()])?;
    }
    let body = w.into_inner().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(String::from_utf8(body).expect("utf-8"))
}

fn verify(args: &VerifyArgs) -> CliResult<String> {
    let marginal = parse_marginal(&args.marginal)?;
    let choice = parse_kernel(&args.kernel)?;
    let kernel = resolve_input_kernel(Some(&choice), &marginal)?;
    let report = kernel.verify(args.seed)?;
    let mut text = format!("kernel {} under {:?}\n", args.kernel, marginal);
    for ((p, m), se) in report.probes.iter().zip(&report.means).zip(&report.std_errors) {
        text.push_str(&format!("  probe {p:>10.4}: mean {m:>10.6} (se {se:.6})\n"));
    }
    text.push_str(&format!("max |mean| = {:.6}\n", report.max_abs_mean));
    Ok(text)
}

fn settings(common: &CommonArgs) -> CliResult<Settings> {
    let file = match &common.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    Ok(file.merge(common))
}

/// Default sample size and replicate count per command.
fn defaults(experiment: Option<Experiment>) -> (usize, usize) {
    match experiment {
        None => (1000, 1),
        Some(Experiment::Ishigami) | Some(Experiment::Categorical) | Some(Experiment::Stochastic) => (1000, 50),
        Some(Experiment::Sir) => (200, 50),
    }
}

/// Run a parsed command line; returns the text for stdout.
pub fn execute(cli: Cli) -> CliResult<String> {
    let (common, name, experiment) = match &cli.command {
        Command::VerifyKernels(args) => return verify(args),
        Command::Estimate(c) => (c, "estimate".to_string(), None),
        Command::Shapley(c) => (c, "shapley".to_string(), None),
        Command::Reproduce { experiment, common } => (common, format!("reproduce {experiment:?}").to_lowercase(), Some(*experiment)),
    };
    let s = settings(common)?;
    let (n, reps) = defaults(experiment);
    let outcome = match experiment {
        Some(e) => {
            let mut model_free = s.clone();
            model_free.model = None;
            if model_free.data.is_some() {
                return Err(CliError::usage("reproduce runs the reference models and takes no --data"));
            }
            let mut cfg = RunConfig::resolve(&name, &model_free, n, reps)?;
            if e == Experiment::Stochastic && s.m.is_none() {
                cfg.m = 200;
            }
            if let Some(m) = &s.model {
                cfg.source = Source::Model { name: m.clone() };
            }
            reproduce(e, &cfg, s.model.as_deref())?
        }
        None => {
            let cfg = RunConfig::resolve(&name, &s, n, reps)?;
            let ctx = Ctx::new(cfg)?;
            if name == "estimate" {
                estimate(&ctx)?
            } else {
                shapley(&ctx)?
            }
        }
    };
    let dir = s.out.clone().unwrap_or_else(|| ".".into());
    write_outcome(&dir, &outcome, common.force)?;
    let names: Vec<&str> = outcome.files.iter().map(|(n, _)| n.as_str()).collect();
    Ok(format!("{}wrote {} in {}\n", outcome.digest, names.join(", "), dir.display()))
}
