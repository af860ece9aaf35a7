use std::process::Command;

use shufflesgd_harness::acceptance::strip_wall_ms;
use shufflesgd_harness::records::{mean_std, rows_to_string};
use shufflesgd_harness::{execute, read_rows, run_experiment, ExperimentConfig, Mode, ResultRow};

fn config(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(body).unwrap()
}

const LOGISTIC: &str = r#"{
    "name": "small",
    "problem": {"type": "synthetic_logistic", "n": 250, "d": 40, "density": 0.1, "seed": 3},
    "strategies": ["rr"],
    "schedules": {"kind": "grid", "alphas": [0.5], "gamma_over_n": [0.01]},
    "epochs": 20,
    "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
}"#;

#[test]
fn grid_cardinality_and_round_trip() {
    let out = execute(&config(LOGISTIC), Mode::Grid, None).unwrap();
    assert_eq!(out.rows.len(), 200);
    assert_eq!(out.aggregates.len(), 20);
    assert!(out.rows.iter().all(|r| r.test_accuracy.is_some() && r.dist_sq.is_none()));
    let text = rows_to_string(&out.rows).unwrap();
    let back: Vec<ResultRow> = read_rows(text.as_bytes()).unwrap();
    assert_eq!(back, out.rows);
    assert_eq!(rows_to_string(&back).unwrap(), text);
    for (k, chunk) in out.rows.chunks(20).enumerate() {
        assert!(chunk.iter().enumerate().all(|(t, r)| r.epoch == t + 1 && r.seed == k as u64));
    }
}

#[test]
fn aggregates_match_brute_force() {
    let cfg = config(
        &LOGISTIC
            .replace(r#""alphas": [0.5]"#, r#""alphas": [0.3333333333333333, 1.0]"#)
            .replace(r#""strategies": ["rr"]"#, r#""strategies": ["rr", "so"]"#),
    );
    let out = execute(&cfg, Mode::Grid, Some(3)).unwrap();
    assert_eq!(out.aggregates.len(), 2 * 2 * 20);
    for a in &out.aggregates {
        let group: Vec<&ResultRow> = out
            .rows
            .iter()
            .filter(|r| {
                r.strategy == a.strategy && r.alpha == a.alpha && r.gamma_over_n == a.gamma_over_n && r.epoch == a.epoch
            })
            .collect();
        assert_eq!(group.len(), a.runs);
        assert_eq!(a.runs, 10);
        let n = group.len() as f64;
        let mean = group.iter().map(|r| r.train_loss).sum::<f64>() / n;
        let var = group.iter().map(|r| (r.train_loss - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((a.train_loss_mean - mean).abs() <= 1e-14 * mean.abs());
        assert!((a.train_loss_std - var.sqrt()).abs() <= 1e-12 * var.sqrt().max(1e-300));
        let acc: Vec<f64> = group.iter().map(|r| r.test_accuracy.unwrap()).collect();
        assert_eq!((a.test_accuracy_mean.unwrap(), a.test_accuracy_std.unwrap()), mean_std(&acc));
    }
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(&LOGISTIC.replace(r#""strategies": ["rr"]"#, r#""strategies": ["rr", "so", "ig"]"#));
    let a = run_experiment(&cfg, Some(&dir.path().join("a")), Some(1)).unwrap();
    let b = run_experiment(&cfg, Some(&dir.path().join("b")), Some(6)).unwrap();
    let read = |p: &std::path::Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(strip_wall_ms(&read(&a.runs)), strip_wall_ms(&read(&b.runs)));
    assert_eq!(read(&a.aggregate), read(&b.aggregate));
    assert_eq!(read(&a.manifest), read(&b.manifest));
    let manifest: serde_json::Value = serde_json::from_str(&read(&a.manifest)).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap(), cfg.hash());
    assert!(manifest["cells"][0]["validity"]["conditions"].is_array());
}

const QUADRATIC: &str = r#"{
    "name": "cmp",
    "problem": {"type": "quadratic", "n": 100, "d": 10, "curvature": [1, 2], "spread": 1, "seed": 5},
    "strategies": ["rr", "so", "ig"],
    "schedules": {"kind": "preset", "preset": "thm2_scvx"},
    "epochs": 200,
    "seeds": [0, 1, 2, 3, 4],
    "init": {"type": "uniform", "radius": 2.0, "seed": 1}
}"#;

#[test]
fn compare_gives_ig_one_run_and_shares_the_start() {
    let out = execute(&config(QUADRATIC), Mode::Compare, None).unwrap();
    let count = |s: &str| out.manifest.runs.iter().filter(|r| r.strategy == s).count();
    assert_eq!((count("rr"), count("so"), count("ig")), (5, 5, 1));
    let w0 = &out.runs[0].result.initial_w;
    assert!(out.runs.iter().all(|r| &r.result.initial_w == w0));
    let final_gap = |s: &str| {
        let gaps: Vec<f64> = out
            .runs
            .iter()
            .filter(|r| r.strategy.label() == s)
            .map(|r| r.result.traces.last().unwrap().metrics.gap.unwrap())
            .collect();
        gaps.iter().sum::<f64>() / gaps.len() as f64
    };
    assert!(final_gap("rr") <= final_gap("ig"));
}

#[test]
fn divergent_cells_are_recorded() {
    let cfg = config(
        r#"{
        "name": "blowup",
        "problem": {"type": "quadratic", "n": 10, "d": 3, "curvature": [1, 2], "spread": 1, "seed": 0},
        "strategies": ["ig"],
        "schedules": {"kind": "grid", "alphas": [0, 1], "gamma_over_n": [100, 0.01]},
        "epochs": 40,
        "seeds": [0],
        "init": {"type": "uniform", "radius": 1.0, "seed": 2}
    }"#,
    );
    let out = execute(&cfg, Mode::Grid, None).unwrap();
    let diverged: Vec<_> = out.manifest.runs.iter().filter(|r| r.divergence.is_some()).collect();
    assert!(!diverged.is_empty());
    assert!(out.manifest.runs.iter().any(|r| r.divergence.is_none() && r.epochs_completed == 40));
    for r in &out.rows {
        let summary = out.manifest.runs.iter().find(|s| s.run_id == r.run_id).unwrap();
        assert_eq!(r.diverged_at, summary.divergence.map(|d| d.epoch));
        assert!(r.train_loss.is_finite());
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shufflesgd"))
}

#[test]
fn cli_exit_codes_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, LOGISTIC.replace("\"epochs\": 20", "\"epochs\": 3")).unwrap();
    let status = cli()
        .args(["run", "--config"])
        .arg(&good)
        .env("SHUFFLESGD_OUT", dir.path().join("env"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("env/small_runs.csv").is_file());

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, LOGISTIC.replace("\"epochs\": 20", "\"epochs\": 0")).unwrap();
    assert_eq!(cli().args(["run", "--config"]).arg(&bad).output().unwrap().status.code(), Some(2));
    assert_eq!(cli().args(["compare", "--config", "/nonexistent.json"]).output().unwrap().status.code(), Some(1));

    let consts = dir.path().join("c.json");
    std::fs::write(
        &consts,
        r#"{"gap0": 1, "dist0_sq": 2, "l": 1, "mu": 0.5, "sigma_star_sq": 0.3, "n": 50, "horizon": 10}"#,
    )
    .unwrap();
    let out = cli().args(["bounds", "--theorem", "scvx-rr-convex-const", "--constants"]).arg(&consts).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("t,bound,initial,noise\n"));
    let bad_id = cli().args(["bounds", "--theorem", "nope", "--constants"]).arg(&consts).output().unwrap().status;
    assert_eq!(bad_id.code(), Some(2));
}
