use std::path::{Path, PathBuf};

use clap::Parser;
use fptorder_cli::output::{read_csv, read_json};
use fptorder_cli::{execute, run, Cli, EXIT_NUMERICAL, EXIT_USAGE};
use fptorder_core::bipoisson::{self, BiPoissonParams};
use fptorder_core::{TriPoissonParams, TrivariateModel};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn invoke(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("fptorder").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    execute(&cli, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn status(args: &[&str]) -> i32 {
    run(std::iter::once("fptorder").chain(args.iter().copied()))
}

#[test]
fn bipoisson_csv_round_trips_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let written = invoke(&[
        "bipoisson",
        "--l1",
        "1",
        "--l2",
        "2",
        "--l12",
        "0.8",
        "--M",
        "5",
        "--grid",
        "0:4:0.05",
        "--out",
        "csv",
        "--out-dir",
        d,
    ]);
    assert_eq!(written.lines().count(), 2);
    let p = BiPoissonParams::new(1.0, 2.0, 0.8, 5).unwrap();
    let s1 = read_csv(&dir.path().join("bipoisson_S1.csv")).unwrap();
    let s2 = read_csv(&dir.path().join("bipoisson_S2.csv")).unwrap();
    assert_eq!(s1.len(), 81);
    for (a, b) in s1.iter().zip(&s2) {
        assert_eq!(a.t.to_bits(), b.t.to_bits());
        assert_eq!(a.value.to_bits(), bipoisson::survival_last(&p, a.t).unwrap().to_bits());
        assert_eq!(b.value.to_bits(), bipoisson::survival_both(&p, b.t).unwrap().to_bits());
        assert!(a.stderr.is_none());
    }
    let header = std::fs::read_to_string(dir.path().join("bipoisson_S1.csv")).unwrap();
    assert!(header.starts_with("t,value\n"));
}

#[test]
fn json_output_carries_metadata_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    invoke(&[
        "trivariate",
        "--l1",
        "1.2",
        "--l2",
        "0.5",
        "--l3",
        "3.3",
        "--l12",
        "1.4",
        "--l13",
        "3.1",
        "--l23",
        "0.12",
        "--out",
        "json",
        "--out-dir",
        d,
    ]);
    let f = read_json(&dir.path().join("trivariate_S2.json")).unwrap();
    assert_eq!(f.metadata.model, "trivariate");
    assert_eq!(f.metadata.label, "S2");
    assert_eq!(f.metadata.parameters["l13"], 3.1);
    assert_eq!(f.metadata.version, env!("CARGO_PKG_VERSION"));
    let text = serde_json::to_string_pretty(&f).unwrap() + "\n";
    assert_eq!(
        text,
        std::fs::read_to_string(dir.path().join("trivariate_S2.json")).unwrap()
    );
    let m = TrivariateModel::new(TriPoissonParams::new([1.2, 0.5, 3.3], [1.4, 3.1, 0.12]).unwrap()).unwrap();
    for r in &f.rows {
        assert_eq!(r.value.to_bits(), m.survival(2, r.t).unwrap().to_bits());
    }
}

#[test]
fn monte_carlo_output_is_deterministic() {
    let run_into = |dir: &Path| {
        let d = dir.to_str().unwrap();
        invoke(&[
            "mc",
            "trivariate",
            "--l1",
            "1.2",
            "--l2",
            "0.5",
            "--l3",
            "3.3",
            "--l12",
            "1.4",
            "--l13",
            "3.1",
            "--l23",
            "0.12",
            "--seed",
            "7",
            "--n",
            "10000",
            "--out-dir",
            d,
        ]);
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path());
    run_into(b.path());
    for label in ["S3", "S2", "S1"] {
        let name = format!("mc_trivariate_{label}.csv");
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name}");
        assert!(String::from_utf8(x).unwrap().starts_with("t,value,stderr\n"));
    }
    let rows = read_csv(&a.path().join("mc_trivariate_S1.csv")).unwrap();
    assert!(rows.iter().all(|r| r.stderr.is_some()));
}

#[test]
fn cds_model_a_second_to_default() {
    let out = invoke(&[
        "cds",
        "--model-file",
        config("modelA.cfg").to_str().unwrap(),
        "--order",
        "2",
    ]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    let u: f64 = row[1].parse().unwrap();
    assert!((u - 41.84).abs() / 41.84 < 5e-3, "u = {u}");
}

#[test]
fn cds_configs_share_first_to_default_spread_between_b_and_c() {
    let quote = |name: &str| -> f64 {
        let out = invoke(&["cds", "--model-file", config(name).to_str().unwrap()]);
        out.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    let (b, c) = (quote("modelB.cfg"), quote("modelC.cfg"));
    assert!((b - c).abs() < 1e-9 * b);
    assert!((b - 42.48).abs() / 42.48 < 5e-3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(status(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(status(&[]), EXIT_USAGE);
    assert_eq!(status(&["bipoisson", "--l1", "1"]), EXIT_USAGE);
    assert_eq!(
        status(&[
            "bipoisson",
            "--l1",
            "-1",
            "--l2",
            "2",
            "--l12",
            "0.8",
            "--M",
            "5",
            "--out-dir",
            d
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        status(&[
            "bipoisson",
            "--l1",
            "1",
            "--l2",
            "2",
            "--l12",
            "0.8",
            "--M",
            "5",
            "--grid",
            "1:0:1",
            "--out-dir",
            d
        ]),
        EXIT_USAGE
    );
    assert_eq!(status(&["cds", "--model-file", "/nonexistent.cfg"]), EXIT_USAGE);
    // densities are undefined at t = 0 and the time floor rejects small t
    assert_eq!(
        status(&[
            "bipoisson",
            "--l1",
            "1",
            "--l2",
            "2",
            "--l12",
            "0.8",
            "--M",
            "5",
            "--density",
            "--grid",
            "0:1:0.5",
            "--out-dir",
            d
        ]),
        EXIT_NUMERICAL
    );
    assert_eq!(
        status(&["singlefile", "--grid", "0:1:0.5", "--out-dir", d]),
        EXIT_NUMERICAL
    );
    assert_eq!(
        status(&[
            "bipoisson",
            "--l1",
            "1",
            "--l2",
            "2",
            "--l12",
            "0.8",
            "--M",
            "5",
            "--out-dir",
            d
        ]),
        0
    );
}

#[test]
fn numerical_failure_names_the_operation() {
    let cli = Cli::try_parse_from(["fptorder", "singlefile", "--grid", "0:1:0.5"]).unwrap();
    let err = execute(&cli, &mut Vec::new()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_NUMERICAL);
    assert!(err.to_string().contains("survival_both_sf"), "{err}");
}

#[test]
fn validate_reports_every_check() {
    let out = invoke(&["--validate"]);
    assert_eq!(out.lines().count(), 6);
    assert!(out.lines().all(|l| l.starts_with("[PASS]")), "{out}");
}

#[test]
fn argument_definitions_are_consistent() {
    use clap::CommandFactory;
    Cli::command().debug_assert();
}
