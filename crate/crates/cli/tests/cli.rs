use std::path::Path;
use std::process::{Command, Output};

use kgsa::OutputValue;
use kgsa_cli::csvio::{ingest_csv, write_csv, OutputKind, Schema};

fn kgsa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgsa"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn verify_kernels_reports_a_small_mean() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgsa(&["verify-kernels", "--kernel", "sobolev:r=1", "--marginal", "uniform:0,1"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let max: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max |mean| = "))
        .expect("reported maximum")
        .trim()
        .parse()
        .unwrap();
    assert!(max < 5e-3, "{text}");
}

#[test]
fn non_zero_mean_input_kernel_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgsa(&["verify-kernels", "--kernel", r#"{"kind":"gaussian","sigma":1.0}"#], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("zero-mean"));
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kgsa(&["estimate", "--bogus"], dir.path())), 1);
    assert_eq!(code(&kgsa(&["estimate"], dir.path())), 1);
    assert_eq!(code(&kgsa(&["estimate", "--model", "nope"], dir.path())), 1);
    assert_eq!(code(&kgsa(&["shapley", "--model", "ishigami", "--estimator", "rank"], dir.path())), 1);
    assert_eq!(code(&kgsa(&["--help"], dir.path())), 0);
}

#[test]
fn constant_output_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..30).map(|i| format!("{},{},1.5\n", i as f64 / 30.0, (i * 7 % 30) as f64)).collect();
    std::fs::write(dir.path().join("flat.csv"), format!("a,b,y\n{rows}")).unwrap();
    let o = kgsa(
        &["estimate", "--data", "flat.csv", "--kernel-out", "gaussian:sigma=1", "--estimator", "knn"],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn ishigami_reproduction_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["reproduce", "ishigami", "--n", "300", "--reps", "4", "--seed", "7", "--out", "res"];
    let o = kgsa(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let res = dir.path().join("res");
    let sobol = read(res.join("ishigami_sobol.csv"));
    let mut lines = sobol.lines();
    let hash_line = lines.next().unwrap();
    assert!(hash_line.starts_with("# config_hash: "));
    assert_eq!(lines.next(), Some("S_1,S_2,S_3,S_4,ST_1,ST_2,ST_3,ST_4"));
    assert_eq!(lines.count(), 4);
    let mmd = read(res.join("ishigami_mmd.csv"));
    assert_eq!(
        mmd.lines().nth(1),
        Some("S_MMD_1,S_MMD_2,S_MMD_3,S_MMD_4,ST_MMD_1,ST_MMD_2,ST_MMD_3,ST_MMD_4")
    );
    let j = json(res.join("ishigami.json"));
    assert_eq!(hash_line, format!("# config_hash: {}", j["config_hash"].as_str().unwrap()));
    assert_eq!(j["seed"], 7);
    assert_eq!(j["replicates"].as_array().unwrap().len(), 4);
    assert_eq!(j["eval_counts"]["model"], 4 * 6 * 300);
    let s1 = &j["summary"]["sobol.S_1"];
    let col: Vec<f64> = sobol
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    assert!((s1["mean"].as_f64().unwrap() - mean).abs() < 1e-12);
}

#[test]
fn same_seed_gives_identical_json_and_other_configs_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str, extra: &[&str]| {
        let mut args = vec!["reproduce", "categorical", "--n", "200", "--reps", "2", "--seed", seed, "--out", out];
        args.extend_from_slice(extra);
        kgsa(&args, dir.path())
    };
    assert_eq!(code(&run("a", "5", &[])), 0);
    assert_eq!(code(&run("b", "5", &[])), 0);
    let a = read(dir.path().join("a/categorical.json"));
    assert_eq!(a, read(dir.path().join("b/categorical.json")));
    // same configuration: rewriting is allowed
    assert_eq!(code(&run("a", "5", &[])), 0);
    let refused = run("a", "6", &[]);
    assert_eq!(code(&refused), 1);
    assert!(stderr(&refused).contains("--force"));
    assert_eq!(read(dir.path().join("a/categorical.json")), a);
    assert_eq!(code(&run("a", "6", &["--force"])), 0);
    assert_ne!(read(dir.path().join("a/categorical.json")), a);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_kgsa"))
            .args(["shapley", "--model", "ishigami", "--n", "300", "--reps", "2", "--estimator", "hsic-v", "--out", out])
            .env("KGSA_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("one", "1")), 0);
    assert_eq!(code(&run("three", "3")), 0);
    assert_eq!(
        read(dir.path().join("one/shapley.json")),
        read(dir.path().join("three/shapley.json"))
    );
    assert_eq!(code(&run("bad", "zero")), 1);
}

#[test]
fn estimate_from_a_sample_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..200)
        .map(|i| {
            let a = (i as f64 * 0.618_033_988_75) % 1.0;
            let b = (i as f64 * 0.414_213_562_37) % 1.0;
            format!("{a},{b},{}\n", (6.0 * a).sin() + 0.1 * b)
        })
        .collect();
    std::fs::write(dir.path().join("s.csv"), format!("a,b,y\n{rows}")).unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"data": "s.csv", "estimator": "hsic-v", "out": "r", "n": 50}"#,
    )
    .unwrap();
    let o = kgsa(&["estimate", "--config", "cfg.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("200 rows, 2 inputs"));
    let j = json(dir.path().join("r/estimate.json"));
    let s1 = j["summary"]["indices.S_1"]["mean"].as_f64().unwrap();
    let s2 = j["summary"]["indices.S_2"]["mean"].as_f64().unwrap();
    assert!(s1 > 0.5 && s2 < 0.2, "{s1} {s2}");
    assert_eq!(j["config"]["source"]["kind"], "data");
    assert_eq!(j["config"]["estimator"], "hsic-v");

    // flags win over the file; bootstrap replicates of the same file
    let o = kgsa(
        &["estimate", "--config", "cfg.json", "--estimator", "rank", "--reps", "3", "--out", "r2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r2 = read(dir.path().join("r2/estimate_indices.csv"));
    assert_eq!(r2.lines().nth(1), Some("S_1,S_2"));
    assert_eq!(r2.lines().count(), 2 + 3);
}

#[test]
fn model_based_estimators() {
    let dir = tempfile::tempdir().unwrap();
    for (est, n) in [("double-loop", "30"), ("pick-freeze", "300"), ("knn", "300")] {
        let out = format!("o-{est}");
        let o = kgsa(
            &["estimate", "--model", "ishigami", "--estimator", est, "--n", n, "--out", &out],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{est}: {}", stderr(&o));
        let j = json(dir.path().join(&out).join("estimate.json"));
        let total = j["summary"]["indices.ST_1"]["mean"].as_f64().unwrap();
        assert!(total > 0.2, "{est}: {total}");
    }
    let j = json(dir.path().join("o-double-loop/estimate.json"));
    // n draws for the total, then (n + 1) m for each singleton and complement
    assert_eq!(j["eval_counts"]["model"], 30 + 2 * 3 * 31 * 30);
    let o = kgsa(&["estimate", "--data", "x.csv", "--estimator", "pick-freeze"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn other_reproductions_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgsa(&["reproduce", "sir", "--n", "30", "--reps", "2", "--out", "r"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curves = read(dir.path().join("r/sir_curves.csv"));
    assert_eq!(curves.lines().nth(1), Some("time,I_over_S0,R_over_S0"));
    assert_eq!(read(dir.path().join("r/sir_hsic_i.csv")).lines().count(), 2 + 2);
    let o = kgsa(
        &["reproduce", "stochastic", "--n", "50", "--m", "25", "--reps", "2", "--out", "r"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(dir.path().join("r/stochastic.json"));
    assert_eq!(j["eval_counts"]["sobol_model"], 2 * 7 * 50);
    assert!(j["summary"]["hsic.S_HSIC_5"]["mean"].is_number());
}

#[test]
fn csv_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let inputs: Vec<Vec<f64>> = (0..50)
        .map(|i| vec![(i as f64).sqrt() / 7.0, 1.0 / (i as f64 + 3.0), -(i as f64).ln_1p() * 1e-7])
        .collect();
    let outputs: Vec<OutputValue> = (0..50)
        .map(|i| OutputValue::dist(vec![i as f64 / 3.0, std::f64::consts::E * i as f64]).unwrap())
        .collect();
    let sample = kgsa::SampleSet::new(inputs, outputs).unwrap();
    let schema = Schema {
        inputs: None,
        output: "bag".into(),
        kind: OutputKind::Dist,
    };
    let path = dir.path().join("bags.csv");
    std::fs::write(&path, write_csv(&sample, &schema).unwrap()).unwrap();
    let back = ingest_csv(&path, &schema).unwrap();
    assert_eq!(back.inputs, sample.inputs);
    assert_eq!(back.outputs, sample.outputs);
    assert_eq!(back.input_names, sample.input_names);
}
