use std::process::Command;

use hwq_cli::experiments::{fit_ld_slope, run_scaling_study, LdSource, ScalingParams};
use hwq_core::compare::levy_sup_samples;
use hwq_core::dist::DistributionSpec;
use hwq_core::rng::StreamFactory;
use rand_distr::{Distribution, Exp, Weibull};
use serde_json::Value;

fn hwq(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hwq")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn hwq_json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let (code, out, err) = hwq(&all);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("bad JSON ({e}); stderr: {err}"));
    (code, v)
}

fn column(v: &Value, name: &str) -> Vec<f64> {
    let cols = v["table"]["columns"].as_array().unwrap();
    let i = cols.iter().position(|c| c["name"] == name).unwrap_or_else(|| panic!("no column {name}"));
    v["table"]["rows"].as_array().unwrap().iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
}

const QUEUE: &[&str] = &["simulate", "queue", "--n", "20", "--reps", "6", "--seed", "11", "--horizon", "200"];

#[test]
fn hash_is_independent_of_worker_count() {
    let hash = |w: &str| {
        let mut args = vec!["--workers", w];
        args.extend_from_slice(QUEUE);
        hwq_json(&args).1["hash"].as_str().unwrap().to_string()
    };
    let one = hash("1");
    assert_eq!(one, hash("3"));
    assert_eq!(one, hash("1"));
}

#[test]
fn worker_count_from_environment() {
    let run = |env: &str| {
        let mut args = QUEUE.to_vec();
        args.push("--json");
        let out = Command::new(env!("CARGO_BIN_EXE_hwq")).env("HWQ_WORKERS", env).args(&args).output().unwrap();
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["hash"].as_str().unwrap().to_string()
    };
    assert_eq!(run("2"), run("4"));
}

#[test]
fn seed_changes_the_hash() {
    let (_, a) = hwq_json(QUEUE);
    let mut other = QUEUE.to_vec();
    *other.last_mut().unwrap() = "300";
    let (_, b) = hwq_json(&other);
    assert_ne!(a["hash"], b["hash"]);
}

#[test]
fn missing_seed_is_an_error() {
    let (code, _, err) = hwq(&["simulate", "queue", "--n", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 5\nn = 30\nB = 2\n[queue]\nn = 12\nreps = 4\nhorizon = 100.0\nx = [0.0, 1.0]\n")
        .unwrap();
    let cfg = cfg.to_str().unwrap();
    let (_, v) = hwq_json(&["--config", cfg, "simulate", "queue"]);
    assert_eq!(v["config"]["n"], 12);
    assert_eq!(v["config"]["B"], 2.0);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(column(&v, "x"), vec![0.0, 1.0]);
    let (_, v) = hwq_json(&["--config", cfg, "simulate", "queue", "--n", "15", "--B", "1.5"]);
    assert_eq!(v["config"]["n"], 15);
    assert_eq!(v["config"]["B"], 1.5);
    assert_eq!(v["config"]["reps"], 4);
}

#[test]
fn csv_carries_a_schema_header_and_dat_companion() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let (code, _, _) = hwq(&[
        "simulate",
        "queue",
        "--n",
        "20",
        "--reps",
        "6",
        "--seed",
        "3",
        "--horizon",
        "200",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(code == 0 || code == 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    let names: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    assert!(header[0].contains("simulate-queue"));
    for name in &names {
        assert!(header.iter().any(|h| h.starts_with(&format!("# column {name}:"))), "undocumented column {name}");
    }
    let dat = std::fs::read_to_string(csv.with_extension("dat")).unwrap();
    assert!(dat.lines().any(|l| !l.starts_with('#') && l.split_whitespace().count() == names.len()));
}

#[test]
fn json_out_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (_, v) = hwq_json(&["bound", "constants", "--json-out", path.to_str().unwrap()]);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v, saved);
}

#[test]
fn bound_constants_example() {
    let (code, v) = hwq_json(&["bound", "constants", "--B", "1", "--alpha", "1.5", "--ca", "1", "--cs", "1"]);
    assert_eq!(code, 0);
    assert!((column(&v, "hwr_rate")[0] - 0.0795775).abs() < 1e-7);
    assert!((column(&v, "c_bs")[0] + 0.2886751).abs() < 1e-7);
    assert!((column(&v, "c_alpha")[0] - 0.3989423).abs() < 1e-7);
}

#[test]
fn bound_eval_examples() {
    let (code, v) = hwq_json(&["bound", "eval", "--which", "kingman", "--sigma-sq-a", "1", "--y", "2"]);
    assert_eq!(code, 0);
    assert_eq!(column(&v, "kingman"), vec![2.0]);
    let (_, v) = hwq_json(&["bound", "eval", "--which", "hwr", "--B", "1", "--ca", "1", "--alpha", "1.5", "--x", "10"]);
    assert!((column(&v, "hwr")[0] - (-0.795775f64).exp()).abs() < 1e-6);
    let (code, v) = hwq_json(&[
        "bound",
        "eval",
        "--which",
        "thm1",
        "--eps",
        "0.25",
        "--frac-moment",
        "1.52",
        "--laplace-one",
        "0.5",
        "--sigma-sq-a",
        "1",
        "--x",
        "16,32,64",
    ]);
    assert_eq!(code, 0);
    let capped = column(&v, "thm1");
    assert!(capped.iter().all(|&c| c == 1.0));
    let raw = column(&v, "thm1_log10");
    assert!(raw.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn bad_spec_string_is_rejected() {
    let (code, _, err) = hwq(&["simulate", "queue", "--seed", "1", "--service", "gamma(k=2)"]);
    assert_eq!(code, 1);
    assert!(err.contains("gamma"), "{err}");
}

#[test]
fn exit_code_one_on_hard_failure_and_two_on_soft() {
    let (code, _, _) = hwq(&[
        "scaling-study",
        "--seed",
        "1",
        "--service",
        "exp",
        "--n-grid",
        "9,16,25",
        "--reps",
        "4",
        "--horizon-factor",
        "0.2",
        "--max-spread",
        "0.5",
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = hwq(&["ld-slope", "--source", "exp", "--seed", "1", "--boot", "10", "--tolerance", "0.0001"]);
    assert_eq!(code, 2);
    let (code, _, _) = hwq(&["ld-slope", "--source", "exp", "--seed", "1", "--boot", "10", "--tolerance", "0.5"]);
    assert_eq!(code, 0);
}

#[test]
fn scaling_rejects_short_grids() {
    let p = ScalingParams { n_grid: vec![100], seed: Some(1), ..Default::default() };
    assert!(run_scaling_study(&p, Value::Null).is_err());
    let (code, _, err) = hwq(&["scaling-study", "--seed", "1", "--n-grid", "25,100"]);
    assert_eq!(code, 1);
    assert!(err.contains("three"), "{err}");
}

#[test]
fn scaling_light_tail_matches_exact_quantiles() {
    let p = ScalingParams {
        service: DistributionSpec::exponential(),
        reps: 20,
        horizon_factor: 4.0,
        seed: Some(9),
        ..Default::default()
    };
    let r = run_scaling_study(&p, Value::Null).unwrap();
    let q = r.table.column("quantile").unwrap();
    let exact = r.table.column("exact_quantile").unwrap();
    for (a, b) in q.iter().zip(&exact) {
        assert!((a - b).abs() <= 0.2 * b, "{a} vs exact {b}");
    }
    let hi = exact.iter().cloned().fold(0.0, f64::max);
    let lo = exact.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 1.3);
}

fn streams() -> StreamFactory {
    StreamFactory::new(20)
}

#[test]
fn ld_slope_exponential() {
    let f = streams();
    for rate in [0.5, 2.0] {
        let d = Exp::new(rate).unwrap();
        let mut rng = f.stream("exp", (rate * 10.0) as u64);
        let xs: Vec<f64> = (0..40_000).map(|_| d.sample(&mut rng)).collect();
        let fit = fit_ld_slope(&xs, 1.0, 0.5, 0.995, 40, 50, &f).unwrap();
        assert!((fit.slope + rate).abs() < 0.05 * rate, "rate {rate}: {}", fit.slope);
        assert!(fit.band[0] <= fit.slope && fit.slope <= fit.band[1]);
    }
}

#[test]
fn ld_slope_weibull() {
    let f = streams();
    for scale in [1.0, 4.0] {
        let d = Weibull::new(scale, 0.5).unwrap();
        let mut rng = f.stream("weibull", scale as u64);
        let xs: Vec<f64> = (0..40_000).map(|_| d.sample(&mut rng)).collect();
        let fit = fit_ld_slope(&xs, 0.5, 0.5, 0.995, 40, 50, &f).unwrap();
        let target = -1.0 / scale.sqrt();
        assert!(((fit.slope - target) / target).abs() < 0.1, "scale {scale}: {} vs {target}", fit.slope);
    }
}

#[test]
fn ld_slope_levy() {
    let f = streams();
    let xs = levy_sup_samples(1.5, 1.0, 1.0, 40_000, &f).unwrap();
    let fit = fit_ld_slope(&xs, 1.0, 0.5, 0.995, 40, 50, &f).unwrap();
    assert!(((fit.slope + 0.0795775) / 0.0795775).abs() < 0.05, "{}", fit.slope);
}

#[test]
fn ld_slope_needs_enough_samples() {
    let xs = vec![1.0; 9_999];
    let err = fit_ld_slope(&xs, 1.0, 0.5, 0.995, 40, 10, &streams()).unwrap_err();
    assert!(err.to_string().contains("10000"));
}

#[test]
fn ld_slope_flags_missing_tail_mass() {
    let xs = vec![1.0; 20_000];
    let err = fit_ld_slope(&xs, 1.0, 0.5, 0.995, 40, 10, &streams()).unwrap_err();
    assert!(err.to_string().contains("tail mass"));
}

#[test]
fn ld_slope_reads_sample_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    let (_, _, _) = hwq(&[
        "simulate",
        "bound-process",
        "--kind",
        "levy",
        "--seed",
        "4",
        "--reps",
        "20000",
        "--out",
        path.to_str().unwrap(),
    ]);
    let (code, v) = hwq_json(&[
        "ld-slope",
        "--input",
        path.to_str().unwrap(),
        "--seed",
        "1",
        "--boot",
        "20",
        "--target",
        "-0.0795775",
    ]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["summary"]["samples"], 20000);
    assert_eq!(serde_json::to_value(LdSource::StableWalk).unwrap(), "stable-walk");
}

#[test]
fn dominance_without_exponential_arrivals_drops_lower_leg() {
    let (code, out, err) = hwq(&[
        "dominance",
        "--seed",
        "2",
        "--n",
        "20",
        "--arrival",
        "pareto(alpha=1.8)",
        "--service",
        "exp",
        "--queue-reps",
        "4",
        "--upper-reps",
        "300",
        "--horizon",
        "200",
        "--json",
    ]);
    assert!(err.contains("lower leg is disabled"), "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(column(&v, "lower").iter().all(|x| x.is_nan()));
    assert!(code == 0 || code == 2, "exit {code}");
}
