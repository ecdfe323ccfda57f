//! End-to-end checks of the `splitgain` binary: exit codes, artifact
//! shapes, determinism, and config handling.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use splitgain::evaluation::Thm4Verdict;
use splitgain::harness::{read_audits_csv, read_dataset, read_tree, RunRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splitgain"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("splitgain-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn parity_example_passes_with_exit_zero() {
    let dir = tmpdir("parity");
    run_ok(bin().args(["parity-example", "--n", "6", "--i", "1", "--j", "4", "--out"]).arg(&dir));
    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record.experiment, "parity-example");
    assert!(record.files.contains(&"verdict.json".to_string()));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn learn_writes_tree_and_audits() {
    let dir = tmpdir("learn");
    run_ok(
        bin()
            .args([
                "learn",
                "--target",
                r#"{"family":"fck","c":2,"k":2}"#,
                "--dist",
                r#"{"kind":"uniform","n":12}"#,
                "--impurity",
                "gini",
                "--depth",
                "4",
                "--out",
            ])
            .arg(&dir),
    );
    let tree = read_tree(&dir.join("tree.json")).unwrap();
    assert_eq!(tree.tree.depth, 4);
    tree.tree.check_invariants().unwrap();
    let audits = read_audits_csv(&dir.join("audits.csv")).unwrap();
    assert_eq!(audits.len(), tree.tree.internal_nodes);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_thm4_verdict_roundtrips_and_is_deterministic() {
    let dir_a = tmpdir("thm4-a");
    let dir_b = tmpdir("thm4-b");
    for dir in [&dir_a, &dir_b] {
        run_ok(
            bin()
                .args([
                    "verify-thm4", "--k", "2", "--delta", "0.25", "--seed", "9", "--out",
                ])
                .arg(dir),
        );
    }
    let verdict: Thm4Verdict =
        serde_json::from_str(&fs::read_to_string(dir_a.join("verdict.json")).unwrap()).unwrap();
    assert!(verdict.no_addressing_splits);
    assert_eq!(
        fs::read(dir_a.join("verdict.json")).unwrap(),
        fs::read(dir_b.join("verdict.json")).unwrap()
    );
    // audits re-parse and agree with the embedded margins
    let audits = read_audits_csv(&dir_a.join("audits.csv")).unwrap();
    assert_eq!(audits.len(), verdict.node_margins.len());
    fs::remove_dir_all(&dir_a).ok();
    fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn invalid_delta_exits_2() {
    let dir = tmpdir("invalid");
    let out = bin()
        .args([
            "learn",
            "--target",
            r#"{"family":"dictator","n":2,"index":0}"#,
            "--dist",
            r#"{"kind":"fixed","delta":0.6,"biases":[0.5,0.5]}"#,
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_tie_rule_exits_2() {
    let dir = tmpdir("ties");
    let out = bin()
        .args([
            "learn",
            "--target",
            r#"{"family":"dictator","n":2,"index":0}"#,
            "--dist",
            r#"{"kind":"uniform","n":2}"#,
            "--ties",
            "bogus",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn gv_search_not_found_exits_1() {
    let dir = tmpdir("gv-notfound");
    // a [6, 3] code with distance 5 does not exist
    let out = bin()
        .args(["gv-search", "--k", "3", "--c", "2", "--d", "5", "--budget", "3000", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn export_dataset_roundtrips_through_the_harness() {
    let dir = tmpdir("export");
    run_ok(
        bin()
            .args([
                "export-dataset",
                "--target",
                r#"{"family":"parity","n":4,"indices":[0,2]}"#,
                "--dist",
                r#"{"kind":"uniform","n":4}"#,
                "--m",
                "25",
                "--seed",
                "3",
                "--out",
            ])
            .arg(&dir),
    );
    let (xs, labels) = read_dataset(&dir.join("dataset.csv")).unwrap();
    assert_eq!(xs.len(), 25);
    for (x, label) in xs.iter().zip(labels) {
        assert_eq!(x[0] ^ x[2], label);
    }
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn address_pmf_subcommand_reports_the_law() {
    let dir = tmpdir("pmf");
    run_ok(
        bin()
            .args([
                "address-pmf",
                "--target",
                r#"{"family":"fck","c":2,"k":2}"#,
                "--dist",
                r#"{"kind":"uniform","n":12}"#,
                "--restriction",
                "[[0,1]]",
                "--out",
            ])
            .arg(&dir),
    );
    let pmf: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("pmf.json")).unwrap()).unwrap();
    assert!((pmf["sum"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(pmf["pmf"].as_array().unwrap().len(), 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_drives_a_run_and_kind_mismatch_is_rejected() {
    let dir = tmpdir("config");
    fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        r#"{"experiment":"parity-example","n":5,"i":0,"j":2}"#,
    )
    .unwrap();
    run_ok(bin().args(["parity-example", "--config"]).arg(&config_path).arg("--out").arg(&dir));
    // same config through the wrong subcommand
    let out = bin()
        .args(["gv-search", "--k", "2", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn gains_subcommand_writes_per_variable_csv() {
    let dir = tmpdir("gains");
    run_ok(
        bin()
            .args([
                "gains",
                "--target",
                r#"{"family":"fck","c":1,"k":2}"#,
                "--dist",
                r#"{"kind":"uniform","n":8}"#,
                "--out",
            ])
            .arg(&dir),
    );
    let csv = fs::read_to_string(dir.join("gains.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("var,class,p,mean0,mean1,gain"));
    assert_eq!(lines.count(), 8);
    // memory rows must dominate addressing rows
    let parse = |line: &str| {
        let cols: Vec<&str> = line.split(',').collect();
        (cols[1].to_string(), cols[5].parse::<f64>().unwrap())
    };
    let rows: Vec<(String, f64)> = csv.lines().skip(1).map(parse).collect();
    let best_addressing =
        rows.iter().filter(|(c, _)| c == "addressing").map(|&(_, g)| g).fold(f64::MIN, f64::max);
    let best_memory =
        rows.iter().filter(|(c, _)| c == "memory").map(|&(_, g)| g).fold(f64::MIN, f64::max);
    assert!(best_memory > best_addressing);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_thm5_small_instance_exits_zero() {
    let dir = tmpdir("thm5");
    run_ok(
        bin()
            .args([
                "verify-thm5", "--k", "4", "--delta", "0.25", "--epsilon", "0.5", "--seed", "3",
                "--out",
            ])
            .arg(&dir),
    );
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["only_free_memory_splits"], true);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn junta_sanity_quick_run_passes() {
    let dir = tmpdir("junta");
    run_ok(
        bin()
            .args([
                "junta-sanity",
                "--junta-arity",
                "2",
                "--n",
                "8",
                "--trials",
                "10",
                "--jobs",
                "2",
                "--seed",
                "5",
                "--out",
            ])
            .arg(&dir),
    );
    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(record.verdict["successes"], 10);
    fs::remove_dir_all(&dir).ok();
}
