use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sps(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sps"));
    cmd.args(args).env_remove("SPS_EPSILON").env_remove("SPS_PHI");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(dir: &Path, args: &[&str]) -> PathBuf {
    let path = dir.join(format!("{}.json", args.join("_").replace(['-', '.'], "")));
    let mut all = vec!["gen-fixture"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let o = sps(&all, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_report_schedule_and_series() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "160"]);
    let out = dir.path().join("run");
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "benders", "-o", out.to_str().unwrap(), "--csv"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = read_json(&out.join("report.json"));
    for key in ["d_d", "p_ls_total", "n_rs", "iterations", "cost", "verified"] {
        assert!(rep.get(key).is_some(), "missing {key}");
    }
    assert!(rep["d_d"].as_f64().unwrap() > 0.0);
    assert!(rep.get("wall_time_s").is_none());
    assert!(read_json(&out.join("timing.json"))["wall_time_s"].as_f64().is_some());
    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("t,p_g_MTG1,p_g_ATG1"));
    assert_eq!(lines.len(), 11);
    let again = sps(&["verify", "-s", scen.to_str().unwrap(), "-x", out.join("schedule.json").to_str().unwrap()], &[]);
    assert_eq!(code(&again), 0, "{}", stdout(&again));
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-o", out.to_str().unwrap()], &[]);
        assert_eq!(code(&o), 0);
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("schedule.json")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1"]);
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "oracle"], &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("too large"), "{}", stderr(&o));
}

#[test]
fn oracle_solves_small_instances() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["random", "--seed", "5", "--mode", "island"]);
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "oracle"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["algorithm"], "Oracle");
}

#[test]
fn lnbd_reports_outer_iterations() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "lnbd", "--phi", "0.5"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep["algorithm"], "Lnbd");
    assert!(rep["iterations"].as_u64().unwrap() >= 1);
}

#[test]
fn phi_profile_is_read_and_checked() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let good = dir.path().join("phi.txt");
    std::fs::write(&good, "0.3 0.3 0.3 0.3 0.3\n0.3,0.3,0.3,0.3,1\n").unwrap();
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "lnbd", "--phi-profile", good.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bad = dir.path().join("short.json");
    std::fs::write(&bad, "[0.5, 1.0]").unwrap();
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "lnbd", "--phi-profile", bad.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("phi has 2 entries"));
}

#[test]
fn sweep_with_one_distance_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1"]);
    let o = sps(&["sweep", "-s", scen.to_str().unwrap(), "--distances", "120"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("distance,benders_cost,benders_p_ls,benders_n_rs,benders_d_d"));
    assert!(lines[1].starts_with("120,"));
}

#[test]
fn paired_sweep_has_gap_column_and_trends() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1"]);
    let csv = dir.path().join("sweep.csv");
    let args = [
        "sweep", "-s", scen.to_str().unwrap(), "--from", "100", "--to", "180", "--step", "20", "-A", "benders", "-A",
        "lnbd", "-o", csv.to_str().unwrap(),
    ];
    let o = sps(&args, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.last(), Some(&"gap_lnbd_vs_benders"));
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);
    let num = |r: &Vec<String>, c: usize| r[c].parse::<f64>().unwrap();
    for pair in rows.windows(2) {
        assert!(num(&pair[1], col("benders_p_ls")) >= num(&pair[0], col("benders_p_ls")) - 1e-6);
        assert!(num(&pair[1], col("benders_d_d")) >= num(&pair[0], col("benders_d_d")) - 1e-6);
    }
    for r in &rows {
        assert!(num(r, col("gap_lnbd_vs_benders")).abs() <= 0.15);
    }
}

#[test]
fn settings_precedence_is_flag_then_env_then_file() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"epsilon": 5000.0}"#).unwrap();
    let iters = |extra: &[&str], env: &[(&str, &str)]| {
        let mut args = vec!["solve", "-s", scen.to_str().unwrap(), "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = sps(&args, env);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let rep: Value = serde_json::from_str(&stdout(&o)).unwrap();
        rep["iterations"].as_u64().unwrap()
    };
    let loose = iters(&[], &[]);
    let tight = iters(&[], &[("SPS_EPSILON", "0.01")]);
    assert!(loose < tight);
    assert_eq!(iters(&["--epsilon", "5000"], &[("SPS_EPSILON", "0.01")]), loose);
    let bad = sps(&["solve", "-s", scen.to_str().unwrap()], &[("SPS_EPSILON", "-1")]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let missing = sps(&["solve", "-s", dir.path().join("none.json").to_str().unwrap()], &[]);
    assert_eq!(code(&missing), 3);
    let capped = sps(&["solve", "-s", scen.to_str().unwrap(), "--max-iter", "1"], &[]);
    assert_eq!(code(&capped), 2);
    let mut s = read_json(&scen);
    s["esms"][0]["e_min"] = Value::from(5.0);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, s.to_string()).unwrap();
    let o = sps(&["solve", "-s", broken.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("esms[0]"), "{}", stderr(&o));
    let o = sps(&["solve", "-s", scen.to_str().unwrap(), "-a", "simplex"], &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_flags_a_tampered_schedule() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case1", "-d", "140"]);
    let out = dir.path().join("run");
    assert_eq!(code(&sps(&["solve", "-s", scen.to_str().unwrap(), "-o", out.to_str().unwrap()], &[])), 0);
    let mut x = read_json(&out.join("schedule.json"));
    x["p_g"][0][3] = Value::from(9.5);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, x.to_string()).unwrap();
    let o = sps(&["verify", "-s", scen.to_str().unwrap(), "-x", tampered.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn faults_describe_the_partition() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["case2"]);
    let o = sps(&["faults", "-s", scen.to_str().unwrap(), "--json"], &[]);
    assert_eq!(code(&o), 0);
    let p: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(p["mode"], "Island");
    assert_eq!(p["parts"].as_array().unwrap().len(), 2);
}

#[test]
fn max_distance_matches_between_methods() {
    let dir = TempDir::new().unwrap();
    let scen = fixture(dir.path(), &["random", "--seed", "3", "--mode", "normal"]);
    let o = sps(&["max-distance", "-s", scen.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let exact: f64 = stdout(&o).trim().parse().unwrap();
    let o = sps(&["max-distance", "-s", scen.to_str().unwrap(), "--oracle-limit", "0"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let estimate: f64 = stdout(&o).trim().parse().unwrap();
    assert!((exact - estimate).abs() <= 0.1, "{exact} vs {estimate}");
}
