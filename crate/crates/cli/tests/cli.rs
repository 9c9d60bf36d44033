use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delaybandit::metrics;
use delaybandit_cli::output::{SWEEP_DETAIL_HEADER, SWEEP_SUMMARY_HEADER, TRACE_HEADER};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delaybandit"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("DELAYBANDIT_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn minimal(algorithm: &str, visibility: &str) -> String {
    format!(
        r#"{{
  "scenario": {{
    "arms": 2, "horizon": 10,
    "losses": {{"kind": "iid-bernoulli", "means": [0.2, 0.7]}},
    "delays": {{"kind": "uniform", "max": 3}},
    "visibility": "{visibility}",
    "seed": 11
  }},
  "algorithm": {algorithm},
  "seeds": [5]
}}"#
    )
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &minimal(r#"{"name": "exp3"}"#, "at-observation-time"),
    );
    let out = dir.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = std::fs::read_to_string(out.join("run_seed5.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], TRACE_HEADER);
    assert_eq!(lines[0], "round,arm,loss,cum_loss,epoch,beta,skipped,delivered_events");
    assert_eq!(lines.len(), 11);

    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary_seed5.json")).unwrap()).unwrap();
    let keys: Vec<&str> = summary.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = vec![
        "regret",
        "learner_loss",
        "best_arm",
        "best_arm_loss",
        "D",
        "D_beta",
        "S_beta",
        "epochs",
        "bounds",
    ];
    expected.sort_unstable();
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, expected);
    let mut bound_keys: Vec<&str> = summary["bounds"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    bound_keys.sort_unstable();
    assert_eq!(bound_keys, ["corollary", "oracle", "oracle_beta", "theorem1"]);
    assert_eq!(summary["S_beta"], 0);
    assert_eq!(summary["D"], summary["D_beta"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &minimal(r#"{"name": "skipper-dew", "beta": 2.0}"#, "at-observation-time"),
    );
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "1",
            "--seed",
            "2",
        ]);
        assert!(o.status.success());
        let files: Vec<Vec<u8>> = [
            "run_seed1.csv",
            "summary_seed1.json",
            "run_seed2.csv",
            "summary_seed2.json",
        ]
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0][0], outputs[0][2]);
}

#[test]
fn overrides_switch_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &minimal(r#"{"name": "exp3"}"#, "at-action-time"));
    let out = dir.path().join("o");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--algo",
        "skipper-dew",
        "--beta",
        "1.5",
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("run_seed5.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(5) == Some("1.5000000000000000e0")));

    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--algo",
        "doubling",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn scale_15_changes_only_the_oracle_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &minimal(r#"{"name": "dew"}"#, "at-observation-time"),
    );
    let read = |sub: &str, extra: &[&str]| {
        let out = dir.path().join(sub);
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(run(&args).status.success());
        serde_json::from_str::<Value>(&std::fs::read_to_string(out.join("summary_seed5.json")).unwrap()).unwrap()
    };
    let plain = read("plain", &[]);
    let scaled = read("scaled", &["--scale-15"]);
    let oracle = plain["bounds"]["oracle"].as_f64().unwrap();
    assert_eq!(
        scaled["bounds"]["oracle"].as_f64().unwrap(),
        metrics::scaled_oracle_bound(oracle, 2)
    );
    assert_eq!(plain["regret"], scaled["regret"]);
    assert_eq!(plain["bounds"]["oracle_beta"], scaled["bounds"]["oracle_beta"]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &minimal(r#"{"name": "doubling"}"#, "at-observation-time"),
    );
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at-action-time"));

    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"scenario": {}, "algorithm": {"name": "exp3"}, "extra": 1}"#,
    );
    assert_eq!(run(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        run(&["run", "--config", "/nonexistent/config.json"]).status.code(),
        Some(2)
    );

    let missing_file = minimal(r#"{"name": "exp3"}"#, "at-observation-time").replace(
        r#"{"kind": "uniform", "max": 3}"#,
        r#"{"kind": "from-file", "path": "nope.csv"}"#,
    );
    let cfg = write_config(dir.path(), "m.json", &missing_file);
    assert_eq!(
        run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn error_kinds_map_to_exit_codes() {
    use delaybandit::Error;
    use delaybandit_cli::CliError;
    for e in [
        Error::Config("c".into()),
        Error::Mode("m".into()),
        Error::Io("i".into()),
    ] {
        assert_eq!(CliError::from(e).exit_code(), 2);
    }
    for e in [
        Error::Invariant("i".into()),
        Error::Protocol("p".into()),
        Error::InvalidDistribution("d".into()),
    ] {
        assert_eq!(CliError::from(e).exit_code(), 3);
    }
}

#[test]
fn out_of_range_losses_in_a_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("losses.csv"), "0,1\n0.5,0.5\n1.5,0\n").unwrap();
    let body = minimal(r#"{"name": "exp3"}"#, "at-observation-time")
        .replace(r#""horizon": 10"#, r#""horizon": 3"#)
        .replace(
            r#"{"kind": "iid-bernoulli", "means": [0.2, 0.7]}"#,
            r#"{"kind": "from-file", "path": "losses.csv"}"#,
        );
    let cfg = write_config(dir.path(), "c.json", &body);
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

fn sweep_config(axis: &str, values: &str, algorithm: &str, delays: &str, horizon: usize) -> String {
    format!(
        r#"{{
  "scenario": {{
    "arms": 3, "horizon": {horizon},
    "losses": {{"kind": "constant-gap", "gap": 0.3}},
    "delays": {delays},
    "visibility": "at-observation-time",
    "seed": 3
  }},
  "algorithm": {algorithm},
  "seeds": [1, 2],
  "sweep": {{"axis": "{axis}", "values": {values}}}
}}"#
    )
}

#[test]
fn horizon_sweep_counts_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let body = sweep_config(
        "horizon",
        "[64, 16, 32]",
        r#"{"name": "dew"}"#,
        r#"{"kind": "constant", "delay": 2}"#,
        8,
    );
    let cfg = write_config(dir.path(), "s.json", &body);
    let mut bytes = Vec::new();
    for (name, threads) in [("x", "1"), ("y", "4")] {
        let out = dir.path().join(name);
        let o = bin()
            .args([
                "sweep",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .env("DELAYBANDIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bytes.push((
            std::fs::read(out.join("sweep_detail.csv")).unwrap(),
            std::fs::read(out.join("sweep_summary.csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    let detail = String::from_utf8(bytes[0].0.clone()).unwrap();
    let lines: Vec<&str> = detail.lines().collect();
    assert_eq!(lines[0], SWEEP_DETAIL_HEADER);
    assert_eq!(lines.len(), 7);
    let keys: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[2].to_string())
        })
        .collect();
    let expect = |v: f64, s: &str| (format!("{v:.16e}"), s.to_string());
    assert_eq!(
        keys,
        vec![
            expect(64.0, "1"),
            expect(64.0, "2"),
            expect(16.0, "1"),
            expect(16.0, "2"),
            expect(32.0, "1"),
            expect(32.0, "2")
        ]
    );
    let summary = String::from_utf8(bytes[0].1.clone()).unwrap();
    assert_eq!(summary.lines().next(), Some(SWEEP_SUMMARY_HEADER));
    assert_eq!(summary.lines().count(), 4);
}

#[test]
fn empty_sweep_and_bad_thread_count_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let body = sweep_config(
        "eta",
        "[]",
        r#"{"name": "exp3"}"#,
        r#"{"kind": "constant", "delay": 0}"#,
        8,
    );
    let cfg = write_config(dir.path(), "s.json", &body);
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );

    let body = sweep_config(
        "eta",
        "[0.1]",
        r#"{"name": "exp3"}"#,
        r#"{"kind": "constant", "delay": 0}"#,
        8,
    );
    let cfg = write_config(dir.path(), "t.json", &body);
    let o = bin()
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("DELAYBANDIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn beta_sweep_regret_is_lowest_at_an_interior_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let body = sweep_config(
        "beta",
        "[2, 6, 400]",
        r#"{"name": "skipper-dew"}"#,
        r#"{"kind": "constant", "delay": 5}"#,
        3000,
    )
    .replace(r#""seeds": [1, 2]"#, r#""seeds": [1, 2, 3, 4, 5, 6]"#);
    let cfg = write_config(dir.path(), "s.json", &body);
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let means: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(means[1] < means[0] && means[1] < means[2], "{means:?}");
}

#[test]
fn bound_matches_metrics_and_is_stable() {
    let o = run(&["bound", "--arms", "3", "--horizon", "500", "--delays", "constant:0"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let k = 3.0f64;
    let expected = 2.0 * ((k * 500.0 * std::f64::consts::E / 2.0) * k.ln()).sqrt();
    assert!((v["theorem1"].as_f64().unwrap() - expected).abs() <= 1e-9 * expected);
    assert_eq!(v["D"], 0);

    let a = run(&["bound", "--arms", "4", "--horizon", "10000", "--delays", "example1"]);
    let b = run(&["bound", "--arms", "4", "--horizon", "10000", "--delays", "example1"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let report =
        metrics::bound_report(delaybandit::env::gen_example1(4, 10_000).unwrap().as_slice(), 4, 10_000).unwrap();
    assert_eq!(v["oracle"].as_f64().unwrap(), report.oracle);
    assert_eq!(v["oracle_beta"].as_f64().unwrap(), report.oracle_beta);
    assert_eq!(v["corollary"].as_f64().unwrap(), report.corollary);
    assert!(report.oracle < 0.5 * report.corollary);
}

#[test]
fn bound_reads_delay_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "3\n0\n1\n4\n").unwrap();
    let o = run(&[
        "bound",
        "--arms",
        "2",
        "--horizon",
        "4",
        "--delays",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["D"], 8);
    assert_eq!(v["delay_histogram"]["4"], 1);
    let report = metrics::bound_report(&[3, 0, 1, 4], 2, 4).unwrap();
    assert_eq!(v["oracle"].as_f64().unwrap(), report.oracle);

    let missing = dir.path().join("missing.csv");
    let o = run(&[
        "bound",
        "--arms",
        "2",
        "--horizon",
        "4",
        "--delays",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_configs_load_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = delaybandit_cli::RunConfig::load(&path).unwrap();
        assert_eq!(delaybandit_cli::RunConfig::parse(&cfg.to_json()).unwrap(), cfg);
        cfg.scenario.materialize().unwrap();
        seen += 1;
    }
    assert_eq!(seen, 2);
}
