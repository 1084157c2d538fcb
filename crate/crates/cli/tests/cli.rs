use std::process::Command;

use harqir::outage::MethodTag;
use harqir_cli::config::{Config, FileConfig, SweepVar};
use harqir_cli::emit::{csv_header, write_csv, write_json};
use harqir_cli::sweep::{run_sweep, sig12, ResultRow, SweepConfig};

fn base_config(methods: Vec<MethodTag>) -> Config {
    Config::resolve(&FileConfig {
        K: Some(4),
        rho: Some(0.5),
        gamma: Some(1.0),
        rate_bits: Some(2.0),
        truncation_N: Some(3),
        mc_samples: Some(100_000),
        seed: Some(42),
        methods: Some(methods),
        ..Default::default()
    })
    .unwrap()
}

fn all_methods() -> Vec<MethodTag> {
    vec![MethodTag::Exact, MethodTag::Mc, MethodTag::Asymptotic]
}

#[test]
fn csv_header_matches_golden_file() {
    let sweep = SweepConfig::new(base_config(all_methods()), SweepVar::PowerDb, vec![0.0], None).unwrap();
    let golden = include_str!("golden/sweep_header.csv");
    assert_eq!(csv_header(&sweep.layout()).join(",") + "\n", golden);
    let mut buf = Vec::new();
    write_csv(&mut buf, &sweep.layout(), &[]).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), golden);
}

#[test]
fn json_round_trip() {
    let sweep = SweepConfig::new(base_config(all_methods()), SweepVar::Rho, vec![0.0, 0.5, 0.9], None).unwrap();
    let rows = run_sweep(&sweep);
    let mut buf = Vec::new();
    write_json(&mut buf, &rows).unwrap();
    let back: Vec<ResultRow> = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back, rows);
}

#[test]
fn repeated_sweep_is_byte_identical() {
    let sweep = SweepConfig::new(base_config(all_methods()), SweepVar::PowerDb, vec![0.0, 10.0, 20.0, 30.0], None)
        .unwrap();
    let render = || {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sweep.layout(), &run_sweep(&sweep)).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn single_point_sweep_equals_direct_call() {
    let base = base_config(all_methods());
    let sweep = SweepConfig::new(base.clone(), SweepVar::PowerDb, vec![10.0], None).unwrap();
    let row = &run_sweep(&sweep)[0];
    let point = base.with(SweepVar::PowerDb, 10.0).unwrap();
    for (tag, outcome) in all_methods().into_iter().zip(&row.methods) {
        let direct = point.query(tag).unwrap().evaluate().unwrap();
        assert_eq!(outcome.p, Some(sig12(direct.p)));
        assert_eq!(outcome.error, Some(sig12(direct.error)));
    }
    assert_eq!(row.powers, vec![10.0; 4]);
}

#[test]
fn sweep_rows_follow_value_order() {
    let sweep = SweepConfig::new(base_config(vec![MethodTag::Asymptotic]), SweepVar::Rounds, vec![3.0, 1.0, 2.0], None)
        .unwrap();
    let ks: Vec<usize> = run_sweep(&sweep).iter().map(|r| r.rounds).collect();
    assert_eq!(ks, vec![3, 1, 2]);
}

fn harqir(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_harqir")).args(args).output().unwrap()
}

#[test]
fn binary_sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "K = 4\nrho = 0.5\nrate_bits = 2\ntruncation_N = 3\nmethods = [\"exact\", \"asymptotic\"]\n\
         [sweep]\nvariable = \"P_T_dB\"\nvalues = [0, 20, 40]\n",
    )
    .unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let o = harqir(&["sweep", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(&out_a).unwrap();
    assert_eq!(a, std::fs::read(&out_b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("P_T_dB,K,rho,"));
    // a flag overrides the file
    let o = harqir(&["sweep", "-c", cfg.to_str().unwrap(), "--rho", "0.9", "--values", "10"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("10,4,0.9,"), "{text}");
}

#[test]
fn binary_exit_codes_by_failure_class() {
    let o = harqir(&["outage", "--rho", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("|rho| < 1"));
    let o = harqir(&["outage", "--powers", "1,-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = harqir(&["sweep", "-c", "/nonexistent/config.toml", "--values", "1"]);
    assert_eq!(o.status.code(), Some(5));
    let o = harqir(&["optimize", "rate", "--epsilon", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = harqir(&["outage", "-k", "6", "--truncation", "1000", "--methods", "exact"]);
    assert_eq!(o.status.code(), Some(3));
    let o = harqir(&["outage", "--k", "2", "--power-db", "10", "--methods", "exact,asymptotic"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn binary_weights_and_design() {
    let o = harqir(&["weights", "-k", "3", "--rho", "0.5", "--truncation", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "l_1,l_2,l_3,W_l,cumulative_mass");
    assert_eq!(lines.count(), 10);

    let o = harqir(&["optimize", "power", "--epsilon", "1e-4", "-k", "2", "--rho", "0.5"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["per_round_power"].as_f64().unwrap();
    let back = harqir(&["outage", "-k", "2", "--rho", "0.5", "--gamma", &p.to_string(), "--methods", "asymptotic"]);
    let r: serde_json::Value = serde_json::from_slice(&back.stdout).unwrap();
    assert!((r[0]["p"].as_f64().unwrap() / 1e-4 - 1.0).abs() < 1e-9);

    let o = harqir(&["optimize", "rate", "--epsilon", "1e-3", "-k", "2", "--power-db", "30"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn binary_selftest_passes() {
    let o = harqir(&["selftest"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 7);
}
