use std::path::PathBuf;
use std::process::{Command, Output};

fn mfair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfair"))
        .args(args)
        .output()
        .expect("mfair runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name]
        .iter()
        .collect();
    p.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn calc_reports_fairness() {
    let v = stdout_json(&mfair(&["calc", "--config", &config("two_miners.json")]));
    let lf1 = v["lf1"][0].as_f64().unwrap();
    assert!((lf1 + 0.016190690035).abs() < 1e-11);
    for key in [
        "pi",
        "reward_rates",
        "lf2",
        "gf1",
        "gf2",
        "iterations",
        "residual",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn baseline_uses_hashrate_as_round_start_rate() {
    let v = stdout_json(&mfair(&[
        "baseline",
        "--config",
        &config("ten_miners.json"),
    ]));
    let pi: Vec<f64> = serde_json::from_value(v["pi"].clone()).unwrap();
    assert_eq!(pi[0], 0.30);
    assert_eq!(pi.len(), 10);
}

#[test]
fn two_miner_csv() {
    let out = mfair(&[
        "two-miner",
        "--alpha-a",
        "0.3",
        "--d-over-t",
        "0.1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha_a,d_over_t,f,pi_a,pi_b,w_ab,w_ba,lf1_a,lf1_b"
    );
    assert!(lines.next().unwrap().starts_with("0.3,0.1,"));
}

#[test]
fn forkscale_defaults_to_csv_grid() {
    let out = mfair(&["forkscale"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 102);
    assert!(text
        .starts_with("d_over_t,i1,i2,i3,i3_over_i1_plus_i2,i3_over_i2\n0.0,1.0,0.0,0.0,0.0,0.0\n"));
}

#[test]
fn simulate_rule_override_and_histogram() {
    let dir = std::env::temp_dir().join(format!("mfair-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let hist = dir.join("h.csv");
    let v = stdout_json(&mfair(&[
        "simulate",
        "--config",
        &config("ten_miners.json"),
        "--rounds",
        "20000",
        "--seed",
        "4",
        "--rule",
        "last-generated",
        "--histogram",
        hist.to_str().unwrap(),
    ]));
    assert_eq!(v["rounds"], 20000);
    assert_eq!(v["result"]["total_rounds"], 20000);
    let text = std::fs::read_to_string(&hist).unwrap();
    assert!(text.starts_with("scale,rounds\n1,"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn compare_csv_has_one_row_per_seed() {
    let out = mfair(&[
        "compare",
        "--config",
        &config("ten_miners.json"),
        "--rounds",
        "20000",
        "--seeds",
        "1,2,3",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("seed,err_pi,err_lf1,err_lf2,baseline_err_lf1,baseline_err_lf2\n1,"));
}

#[test]
fn sweep_writes_grid_by_rule_rows() {
    let out = mfair(&[
        "sweep",
        "--config",
        &config("ten_miners.json"),
        "--rounds",
        "5000",
        "--seeds",
        "1,2",
        "--grid",
        "0.01,0.1",
        "--rules",
        "first-seen,random",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].contains("err_lf1_sample_sd"));
    assert!(rows[1].starts_with("0.01,first-seen,2,5000,"));
    assert!(rows[4].starts_with("0.1,random,"));
}

#[test]
fn errors_are_machine_readable() {
    let out = mfair(&["calc"]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "invalid_input");

    let dir = std::env::temp_dir().join(format!("mfair-bad-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"n": 2, "alpha": [0.5, 0.6], "delays": {"constant": 1.0}, "mean_interval": 600, "rule": "first-seen"}"#,
    )
    .unwrap();
    let out = mfair(&["calc", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "model");
    assert!(v["error"]["message"].as_str().unwrap().contains("hashrate"));
    let _ = std::fs::remove_dir_all(dir);
}
