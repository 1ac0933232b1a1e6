use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_vfc-sim");

fn vfc(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A short scenario so each run takes milliseconds.
fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, "n_tvs = 6\nn_fvs = 4\nhorizon_slots = 5\n").unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_metrics_and_slot_series() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out = vfc(&[
        "run",
        "--config",
        s(&cfg),
        "--policy",
        "jcratoa",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    for key in [
        "avg_delay_s",
        "completion_ratio",
        "throughput_bps",
        "jain_fairness",
        "avg_energy_j",
    ] {
        assert!(metrics[key].is_number(), "missing {key}");
    }
    let slots = fs::read_to_string(dir.path().join("slots.csv")).unwrap();
    // header plus one line per slot
    assert_eq!(slots.lines().count(), 1 + 5);
}

#[test]
fn identical_runs_are_byte_identical_and_seed_matters() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let read = |sub: &str, seed: &str| {
        let d = dir.path().join(sub);
        let out = vfc(&[
            "run",
            "--config",
            s(&cfg),
            "--policy",
            "nso",
            "--seed",
            seed,
            "--out-dir",
            s(&d),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read(d.join("metrics.json")).unwrap()
    };
    let a = read("a", "11");
    assert_eq!(a, read("b", "11"));
    assert_ne!(a, read("c", "12"));
}

#[test]
fn missing_config_exits_2() {
    let out = vfc(&["run", "--config", "/no/such/file.toml", "--policy", "alo"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/no/such/file.toml"));
}

#[test]
fn invalid_config_exits_3_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "n_rsus = 0\n").unwrap();
    let out = vfc(&[
        "run",
        "--config",
        s(&cfg),
        "--policy",
        "alo",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("n_rsus"), "{}", stderr(&out));
    assert!(!dir.path().join("metrics.json").exists());
}

#[test]
fn unknown_key_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "n_tv = 5\n").unwrap();
    let out = vfc(&[
        "run",
        "--config",
        s(&cfg),
        "--policy",
        "alo",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("n_tv"), "{}", stderr(&out));
}

#[test]
fn unknown_policy_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out = vfc(&[
        "run",
        "--config",
        s(&cfg),
        "--policy",
        "greedy",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn sweep_row_count_seeds_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let sweep = |name: &str| {
        let csv = dir.path().join(name);
        let out = vfc(&[
            "sweep",
            "--config",
            s(&cfg),
            "--param",
            "n_tvs",
            "--values",
            "2,4,6",
            "--policies",
            "alo,jcratoa",
            "--seeds",
            "3",
            "--out",
            s(&csv),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        fs::read_to_string(csv).unwrap()
    };
    let text = sweep("a.csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param_value,policy,seed,avg_delay_s,completion_ratio,throughput_bps,jain_fairness,avg_energy_j"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 2 * 3);
    // seeds count up from the scenario's base seed (1 by default)
    let seeds: Vec<&str> = rows.iter().take(3).map(|r| r[2]).collect();
    assert_eq!(seeds, ["1", "2", "3"]);
    assert_eq!(text, sweep("b.csv"));
}

#[test]
fn sweep_with_empty_values_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let csv = dir.path().join("out.csv");
    let out = vfc(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "n_tvs",
        "--values",
        "",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("values"));
    assert!(!csv.exists());
}

#[test]
fn sweep_with_unknown_param_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let out = vfc(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "speed",
        "--values",
        "1",
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("speed"));
}

fn write_sweep(dir: &Path, policies: &str) -> PathBuf {
    let cfg = small_config(dir);
    let csv = dir.join("sweep.csv");
    let out = vfc(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "n_tvs",
        "--values",
        "2,4",
        "--policies",
        policies,
        "--seeds",
        "2",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    csv
}

#[test]
fn plot_draws_one_line_per_policy() {
    let dir = TempDir::new().unwrap();
    let csv = write_sweep(dir.path(), "alo,nro,jcratoa");
    let svg = dir.path().join("delay.svg");
    let out = vfc(&[
        "plot",
        "--input",
        s(&csv),
        "--metric",
        "avg_delay_s",
        "--out",
        s(&svg),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert_eq!(text.matches("<polyline").count(), 3);

    let csv = write_sweep(dir.path(), "nfo");
    let out = vfc(&[
        "plot",
        "--input",
        s(&csv),
        "--metric",
        "jain_fairness",
        "--out",
        s(&svg),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read_to_string(&svg)
            .unwrap()
            .matches("<polyline")
            .count(),
        1
    );
}

#[test]
fn plot_unknown_metric_exits_3_listing_names() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("x.svg");
    let out = vfc(&[
        "plot",
        "--input",
        "whatever.csv",
        "--metric",
        "latency",
        "--out",
        s(&svg),
    ]);
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    for m in [
        "avg_delay_s",
        "completion_ratio",
        "throughput_bps",
        "jain_fairness",
        "avg_energy_j",
    ] {
        assert!(err.contains(m), "{err}");
    }
    assert!(!svg.exists());
}

#[test]
fn plot_missing_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = vfc(&[
        "plot",
        "--input",
        s(&dir.path().join("none.csv")),
        "--metric",
        "avg_delay_s",
        "--out",
        s(&dir.path().join("x.svg")),
    ]);
    assert_eq!(code(&out), 2);
}
