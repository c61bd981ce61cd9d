use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ewsvm_core::features::feature_vector;
use ewsvm_core::io::{read_dataset, read_witness, witness_text, write_text, KeyValues};
use ewsvm_core::qcore::DensityMatrix;
use ewsvm_core::witness::{Normalization, WitnessOperator};

fn ewsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewsvm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_writes_balanced_rows_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ewsvm(&[
            "gen",
            "--qubits",
            "2",
            "--per-class",
            "50",
            "--seed",
            "7",
            "--out",
            p(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("50 separable, 50 entangled"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let meta = |x: &Path| fs::read(x.with_extension("csv.meta")).unwrap();
    assert_eq!(meta(&a), meta(&b));
    let (set, n) = read_dataset(&a).unwrap();
    assert_eq!((set.len(), n), (100, 2));
}

#[test]
fn edge_family_entangled_rows_carry_edge_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("edge.csv");
    let o = ewsvm(&[
        "gen",
        "--qubits",
        "3",
        "--family",
        "edge-ppt-entangled",
        "--per-class",
        "20",
        "--seed",
        "3",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta =
        KeyValues::parse(&fs::read_to_string(dir.path().join("edge.csv.meta")).unwrap()).unwrap();
    assert_eq!(meta.get("family"), Some("edge-ppt"));
    for i in 20..40 {
        let row = meta.require(&format!("sample.{i}")).unwrap();
        assert!(row.contains("edge-ppt"), "{row}");
    }
}

#[test]
fn family_and_qubit_count_must_agree() {
    let o = ewsvm(&[
        "gen",
        "--qubits",
        "2",
        "--family",
        "werner-ghz3",
        "--out",
        "/dev/null",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = ewsvm(&["gen", "--family", "werner-bell7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_and_certify_two_qubit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let o = ewsvm(&[
        "gen",
        "--qubits",
        "2",
        "--per-class",
        "150",
        "--seed",
        "7",
        "--out",
        p(&data),
    ]);
    assert!(o.status.success());
    let o = ewsvm(&[
        "train",
        "--data",
        p(&data),
        "--seed",
        "7",
        "--out",
        p(dir.path()),
    ]);
    let text = stdout(&o);
    assert!(
        o.status.success(),
        "{text}{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(text.contains("verdict: valid"), "{text}");
    assert!(text.contains("threshold: werner-bell00"), "{text}");
    let (w, report) = read_witness(&dir.path().join("witness.txt")).unwrap();
    assert_eq!(report.get("verdict"), Some("valid"));
    assert!((w.trace() - 1.0).abs() < 1e-12);

    let cert = dir.path().join("cert.txt");
    let o = ewsvm(&[
        "certify",
        "--witness",
        p(&dir.path().join("witness.txt")),
        "--out",
        p(&cert),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let kv = KeyValues::parse(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert!(kv.require("optimality").is_ok());
    assert!(kv.get("pptes.count").is_none());
}

#[test]
fn certify_rejects_a_positive_operator() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.txt");
    let mut coeffs = vec![0.0; 16];
    coeffs[0] = 0.25;
    let w = WitnessOperator::from_coefficients(2, coeffs, Normalization::UnitTrace).unwrap();
    write_text(&path, &witness_text(&w, &KeyValues::new())).unwrap();
    let o = ewsvm(&["certify", "--witness", p(&path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not a witness"));
}

#[test]
fn certify_reference_reports_edge_hits() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("ew22.txt");
    let o = ewsvm(&[
        "certify",
        "--load-reference",
        "ew22",
        "--restarts",
        "64",
        "--grid",
        "8",
        "--out",
        p(&cert),
    ]);
    let kv = KeyValues::parse(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert!(kv.require("pptes.count").is_ok());
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
}

#[test]
fn load_reference_verifies_without_training() {
    let dir = tempfile::tempdir().unwrap();
    let o = ewsvm(&["train", "--load-reference", "w1", "--out", p(dir.path())]);
    let text = stdout(&o);
    assert!(text.contains("min_eigenvalue"), "{text}");
    let (w, kv) = read_witness(&dir.path().join("witness.txt")).unwrap();
    assert_eq!(kv.get("source"), Some("w1"));
    assert!((w.trace() - 0.9998).abs() < 1e-9);
}

#[test]
fn pca_rows_match_dataset_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    assert!(
        ewsvm(&["gen", "--per-class", "40", "--seed", "1", "--out", p(&data)])
            .status
            .success()
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ewsvm(&["pca", "--data", p(&data), "--out", p(out)]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("explained variance shares"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("pc1,pc2,pc3,label"));
    assert_eq!(text.lines().count(), 81);
    assert_eq!(text, fs::read_to_string(&b).unwrap());
}

#[test]
fn pca_of_a_werner_line_is_one_dimensional() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("line.csv");
    let phi = ewsvm_core::states::bell_state(0, 0).unwrap();
    let mut csv = String::from("label");
    for s in ewsvm_core::qcore::PauliString::all(2) {
        csv.push(',');
        csv.extend(s.letters().iter().map(|l| l.symbol()));
    }
    csv.push('\n');
    for i in 0..30 {
        let q = i as f64 / 29.0;
        let rho: DensityMatrix = ewsvm_core::states::werner(&phi, q).unwrap();
        let f = feature_vector(&rho).unwrap();
        let label = if q <= 1.0 / 3.0 { "+1" } else { "-1" };
        let vals: Vec<String> = f.values().iter().map(|v| format!("{v:.16e}")).collect();
        csv += &format!("{label},{}\n", vals.join(","));
    }
    fs::write(&data, csv).unwrap();
    let o = ewsvm(&[
        "pca",
        "--data",
        p(&data),
        "--out",
        p(&dir.path().join("pca.csv")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let first: f64 = text
        .split(':')
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(first >= 0.999, "{text}");
}

#[test]
fn missing_input_is_an_io_failure() {
    let o = ewsvm(&["pca", "--data", "/nonexistent/d.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = ewsvm(&[
        "run",
        "--per-class",
        "100",
        "--seed",
        "3",
        "--refine-rounds",
        "4",
        "--out",
        p(&out),
    ]);
    assert!(
        o.status.success(),
        "{}{}",
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "dataset.csv",
        "dataset.csv.meta",
        "model.txt",
        "witness.txt",
        "report.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}
