use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use weyl_core::exactzero::RationalPoint;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_weyl-lab"));
    c.env_remove("WEYL_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn records(out: &[u8]) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_reader(out);
    rdr.records().map(|r| r.unwrap()).collect()
}

fn header(out: &[u8]) -> Vec<String> {
    let mut rdr = csv::Reader::from_reader(out);
    rdr.headers().unwrap().iter().map(String::from).collect()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn certify_quadratic_point() {
    let out = run(&["certify", "--point", "1,1/12", "--span", "12"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(header(&out.stdout), ["point", "span", "mechanism", "verified", "residual"]);
    let rows = records(&out.stdout);
    assert_eq!(&rows[0][0], "1,1/12");
    assert_eq!(&rows[0][2], "half-period-pairing");
    assert_eq!(&rows[0][3], "true");
    // sidecar goes to stderr when the table goes to stdout
    let meta: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(meta["mechanism"], "half-period-pairing");
    assert_eq!(meta["verified"], true);
}

#[test]
fn eval_zero_point() {
    let out = run(&["eval", "--point", "0,0", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = records(&out.stdout);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 10.0);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn eval_kernels_agree_and_trace() {
    let get = |kernel: &str| {
        let out = run(&["eval", "--point", "1,3/7", "--n", "1000", "--kernel", kernel]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let r = &records(&out.stdout)[0];
        (r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap())
    };
    let (a, b, c) = (get("incremental"), get("direct"), get("exact"));
    assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
    assert!((a.0 - c.0).abs() < 1e-9 && (a.1 - c.1).abs() < 1e-9);
    let out = run(&["eval", "--point", "0.3,0.2", "--n", "100", "--stride", "10"]);
    assert_eq!(records(&out.stdout).len(), 10);
    let out = run(&["eval", "--point", "0.3,0.2", "--n", "10", "--kernel", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cantor_expectation_within_three_sigma() {
    let out = run(&["cantor", "expectation", "--rect", "0,0,0.5,0.5", "--depth", "1", "--trials", "100000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out.stdout)[0];
    let mean: f64 = r[3].parse().unwrap();
    let stderr: f64 = r[4].parse().unwrap();
    assert!((mean - 0.25).abs() <= 3.0 * stderr, "{mean} {stderr}");
}

#[test]
fn output_file_gets_sidecar_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("fam.csv");
    let out = run(&["family", "--family", "P_p", "--p", "3", "--output", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let meta = read_json(&dir.path().join("fam.json"));
    assert_eq!(meta["subcommand"], "family");
    assert_eq!(meta["family"], "P_p");
    assert_eq!(meta["p"], 3);
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["members"], 16);
    // every point parses back exactly and vanishes over its span
    let data = std::fs::read(&csv_path).unwrap();
    for r in records(&data) {
        let pt: RationalPoint = r[3].parse().unwrap();
        assert_eq!(pt.to_string(), &r[3]);
        assert_eq!(pt.modulus(), 12);
        assert_eq!(&r[5], "vanishing");
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    let p = dir.path().join("w.csv");
    for threads in ["1", "1", "3"] {
        let out = run(&[
            "cantor", "weyl-stat", "--depth", "4", "--realizations", "3", "--per-realization", "4", "--n-max", "500",
            "--seed", "9", "--threads", threads, "--output", p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(&p).unwrap(), std::fs::read(p.with_extension("json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].0, outputs[2].0);
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.csv");
    let out = bin()
        .env("WEYL_LAB_THREADS", "2")
        .args(["band", "--x", "0.2", "--y", "0", "--n-max", "1000", "--output", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&p.with_extension("json"))["threads"], 2);
    let out = bin().env("WEYL_LAB_THREADS", "many").args(["band", "--x", "0.2", "--y", "0", "--n-max", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    // unknown flag
    assert_eq!(run(&["eval", "--point", "0", "--n", "3", "--bogus", "1"]).status.code(), Some(2));
    // contract violation named in the message
    let out = run(&["certify", "--point", "1/1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("modulus"));
    let out = run(&["family", "--family", "Q_p", "--p", "4"]);
    assert_eq!(out.status.code(), Some(2));
    // capacity
    assert_eq!(run(&["cantor", "sample", "--depth", "16"]).status.code(), Some(3));
    assert_eq!(run(&["family", "--family", "Q_p", "--p", "211"]).status.code(), Some(3));
}

#[test]
fn cantor_pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let real = dir.path().join("real.txt");
    let pts = dir.path().join("pts.csv");
    assert_eq!(run(&["cantor", "sample", "--depth", "8", "--seed", "5", "--output", real.to_str().unwrap()]).status.code(), Some(0));
    assert!(dir.path().join("real.json").exists());
    let m = run(&["cantor", "measure", "--realization", real.to_str().unwrap(), "--rect", "0,0,1,1", "--exact"]);
    let r = &records(&m.stdout)[0];
    assert_eq!(&r[3], "1");
    let d = run(&[
        "cantor", "draw", "--realization", real.to_str().unwrap(), "--count", "20000", "--output", pts.to_str().unwrap(),
    ]);
    assert_eq!(d.status.code(), Some(0));
    let b = run(&["boxdim", "--input", pts.to_str().unwrap(), "--k-min", "1", "--k-max", "6"]);
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    let meta: Value = serde_json::from_slice(&b.stderr).unwrap();
    let slope = meta["slope"].as_f64().unwrap();
    assert!((1.4..=1.7).contains(&slope), "{slope}");
}

#[test]
fn json_format_carries_rows() {
    let out = run(&["bounds", "--kind", "gauss-p", "--p-max", "13", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["p"], 2);
    assert!(v["fitted_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn remaining_subcommands_run() {
    let cases: &[&[&str]] = &[
        &["dio", "--family", "Q*", "--depth", "2"],
        &["delta", "--family", "Q_p", "--p", "7", "--eta", "0.5", "--samples", "16"],
        &["continuity", "--anchor", "0,1/14", "--p", "7", "--n", "14", "--tau", "0,0.5"],
        &["liminf", "--point", "1/12,1/12", "--n-max", "100"],
        &["search", "--region", "0..1,0..1", "--eps", "0.01", "--n-cap", "1000", "--budget", "200"],
        &["orbit", "--point", "1/13,2/13", "--n-max", "10000"],
        &["restricted", "--alpha", "0.6", "--count", "10", "--n-max", "1000"],
        &["psi", "--n", "100", "--grid", "100"],
        &["cf", "--x", "0.5"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!records(&out.stdout).is_empty(), "{args:?}");
    }
    let out = run(&["continuity", "--anchor", "0,1/14", "--p", "7", "--n", "14", "--tau", "0"]);
    let r = &records(&out.stdout)[0];
    assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
}
