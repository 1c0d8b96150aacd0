use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hdqkd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdqkd"))
        .args(args)
        .env("HDQKD_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hdqkd(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(dir: &Path, args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    serde_json::from_str(&ok(dir, &all)).unwrap()
}

#[test]
fn run_bb84_depolarizing() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(
        dir.path(),
        &["run", "--protocol", "bb84", "--dim", "4", "--noise", "depolarizing:0.05", "--rounds", "100000", "--seed", "7"],
    );
    let e = v["e_b"].as_f64().unwrap();
    let n = v["sifted"].as_f64().unwrap();
    let sigma = (0.0375f64 * 0.9625 / n).sqrt();
    assert!((e - 0.0375).abs() < 4.0 * sigma, "e_b {e}");
    assert!((v["e_b_matrix"].as_f64().unwrap() - 0.0375).abs() < 1e-12);
    for f in ["detection.csv", "transcript.txt", "messages.log", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn run_chau15_identity() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(dir.path(), &["run", "--protocol", "chau15", "--dim", "4", "--noise", "none", "--rounds", "60000"]);
    assert_eq!(v["e_b"].as_f64(), Some(0.0));
    assert_eq!(v["e_b_matrix"].as_f64(), Some(0.0));
    assert_eq!(v["e_d"].as_f64(), Some(0.0));
    let frac = v["sifted_fraction"].as_f64().unwrap();
    let sigma = (1.0 / 6.0 * 5.0 / 6.0 / 60000.0f64).sqrt();
    assert!((frac - 1.0 / 6.0).abs() < 4.0 * sigma);
    assert_eq!(v["sifting_expected"], "1/6");
}

#[test]
fn run_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "--protocol", "mub", "--dim", "4", "--noise", "rotation:0.2", "--rounds", "5000", "--shots", "2000", "--seed", "3"];
    assert_eq!(ok(a.path(), &args), ok(b.path(), &args));
    for f in ["detection.csv", "transcript.txt", "messages.log", "summary.txt"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    let other = ["run", "--protocol", "mub", "--dim", "4", "--noise", "rotation:0.2", "--rounds", "5000", "--shots", "2000", "--seed", "4"];
    ok(c.path(), &other);
    assert_ne!(fs::read(a.path().join("transcript.txt")).unwrap(), fs::read(c.path().join("transcript.txt")).unwrap());
}

fn csv_record(text: &str) -> Vec<(String, String)> {
    let mut lines = text.lines();
    let keys = lines.next().unwrap().split(',');
    let vals = lines.next().unwrap().split(',');
    keys.zip(vals).map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn json_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["run", "--protocol", "singapore", "--dim", "2", "--noise", "depolarizing:0.1", "--rounds", "3000", "--seed", "9"];
    let v = json(dir.path(), &base);
    let mut csv_args = base.to_vec();
    csv_args.extend(["--format", "csv"]);
    let rec = csv_record(&ok(dir.path(), &csv_args));
    assert_eq!(rec.len(), v.as_object().unwrap().len());
    for (k, s) in rec {
        match &v[&k] {
            Value::Number(n) => assert_eq!(s.parse::<f64>().unwrap(), n.as_f64().unwrap(), "{k}"),
            Value::String(t) => assert_eq!(&s, t),
            Value::Null => assert!(s.is_empty(), "{k}"),
            other => panic!("{k}: {other}"),
        }
    }
}

#[test]
fn rates_examples() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(dir.path(), &["rates", "--table1"]);
    let bb84 = table.lines().find(|l| l.starts_with("bb84") && l.contains(" 2 ")).unwrap();
    assert!(bb84.contains("0.8901"), "{bb84}");
    assert!(table.contains("0.8170*"));
    let one = ok(dir.path(), &["rates", "--protocol", "mub", "--dim", "4", "--eb", "0.0387"]);
    assert!(one.contains("rate=1.5316"), "{one}");
    let zero = ok(dir.path(), &["rates", "--protocol", "bb84", "--dim", "2", "--eb", "0"]);
    assert!(zero.contains("rate=1.0000"), "{zero}");
    let rows = json(dir.path(), &["rates", "--table1"]);
    assert_eq!(rows.as_array().unwrap().len(), 8);
    let over = ok(dir.path(), &["rates", "--table1", "--set", "bb84.d2.eb=0", "--format", "csv"]);
    assert!(over.lines().any(|l| l.starts_with("bb84,2,") && l.contains(",1,true,")), "{over}");
}

#[test]
fn thresholds_examples() {
    let dir = tempfile::tempdir().unwrap();
    let t = ok(dir.path(), &["thresholds"]);
    for want in ["d=4 e_b_max=18.93%", "d=2 e_b_max=11.00%", "d=2 e_b_max=38.93%*", "d=8 e_b_max=50.00%*"] {
        assert!(t.contains(want), "{want} in {t}");
    }
    assert!(t.lines().any(|l| l.starts_with("mub") && l.contains("23.17%")));
}

#[test]
fn tomography_examples() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(dir.path(), &["tomography", "--synthetic", "identity", "--dim", "2", "--method", "mub"]);
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    let v = json(dir.path(), &["tomography", "--synthetic", "depolarizing:0.1", "--dim", "2", "--method", "sic"]);
    assert!((v["fidelity"].as_f64().unwrap() - 0.925).abs() < 1e-4);
    assert!((v["epsilon"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    // the synthetic run left its detection matrix behind; fit it again from disk
    let input = dir.path().join("detection.csv");
    let again = json(dir.path(), &["tomography", "--input", input.to_str().unwrap()]);
    assert_eq!(again["method"], "sic");
    assert!((again["fidelity"].as_f64().unwrap() - 0.925).abs() < 1e-4);
    assert!(dir.path().join("chi.csv").exists());
}

#[test]
fn tomography_pexp_mi() {
    let dir = tempfile::tempdir().unwrap();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/appendix_pexp.csv");
    let v = json(dir.path(), &["tomography", "--input", path.to_str().unwrap(), "--mi"]);
    assert!((v["epsilon"].as_f64().unwrap() - 0.0137).abs() < 1e-4);
    assert!((v["twirled_mi"].as_f64().unwrap() - 0.388).abs() < 1e-3);
    assert!(v["mutual_information"].as_f64().unwrap() > 0.38);
}

#[test]
fn errors_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--protocol", "chau15", "--dim", "2"],
        vec!["run", "--protocol", "bb84", "--dim", "2", "--noise", "wobble:1"],
        vec!["tomography", "--input", "missing.csv"],
        vec!["tomography", "--synthetic", "identity", "--method", "mub", "--mi"],
        vec!["rates", "--protocol", "chau15", "--dim", "4"],
    ] {
        let out = hdqkd(dir.path(), &args);
        assert!(!out.status.success(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn incomplete_input_is_named() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["run", "--protocol", "bb84", "--dim", "2", "--rounds", "10"]);
    let input = dir.path().join("detection.csv");
    let out = hdqkd(dir.path(), &["tomography", "--input", input.to_str().unwrap(), "--method", "mub"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("informationally complete"), "{err}");
}
