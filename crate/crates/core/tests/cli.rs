use std::path::Path;
use std::process::{Command, Output};

use mmwave_mc::harness::{read_csv, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmwave-mc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn mmwave-mc")
}

fn small_config(dir: &Path) -> String {
    let mut cfg = ExperimentConfig::ula();
    cfg.system.n_t = 16;
    cfg.system.n_r = 8;
    cfg.system.k_t = 2;
    cfg.training.stages = 16;
    cfg.training.steps = 2;
    cfg.trials = 3;
    cfg.se.snr_db = vec![0.0, 10.0];
    cfg.estimators = vec!["gcg-alt".into(), "omp".into(), "perfect-csi".into()];
    let path = dir.join("small.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

/// CSV text with the wall-time column blanked.
fn without_wall_time(csv: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "wall_ms").unwrap();
    let mut out = vec![header.join(",")];
    for line in lines {
        let mut f: Vec<&str> = line.split(',').collect();
        f[col] = "";
        out.push(f.join(","));
    }
    out.join("\n")
}

#[test]
fn print_config_round_trips() {
    let out = run(&["print-config", "--preset", "uspa", "--trials", "7"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!((cfg.system.n_t, cfg.trials), (144, 7));
}

#[test]
fn config_errors_exit_with_two() {
    let out = run(&["print-config", "--estimators", "gcg-alt,fista"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fista"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"system": {}}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
}

#[test]
fn sweep_is_reproducible_and_feeds_rank_hist() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["sweep", "--config", &cfg, "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(without_wall_time(&ta), without_wall_time(&tb));

    let (records, snr) = read_csv(ta.as_bytes()).unwrap();
    assert_eq!(records.len(), 9);
    assert_eq!(snr, vec![0.0, 10.0]);
    assert!(ta.lines().next().unwrap().contains("se_at_snr_10"));

    let hist = run(&["rank-hist", a.to_str().unwrap()]);
    assert!(hist.status.success());
    let json: serde_json::Value = serde_json::from_slice(&hist.stdout).unwrap();
    assert_eq!(json["r_sub"]["samples"], 3);
}

#[test]
fn estimate_prints_one_row_per_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = run(&["estimate", "--config", &cfg, "--trial", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().any(|r| r.starts_with("perfect-csi\t")));
    assert_eq!(run(&["estimate", "--config", &cfg, "--point", "9"]).status.code(), Some(2));
}

#[test]
fn gen_channel_is_seeded() {
    let a = run(&["gen-channel", "--channel-seed", "5"]);
    let b = run(&["gen-channel", "--channel-seed", "5"]);
    let c = run(&["gen-channel", "--channel-seed", "6"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
