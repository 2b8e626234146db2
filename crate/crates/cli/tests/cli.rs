use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn nlpb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlpb"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).expect("config should be written");
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("report should exist")).expect("report should parse")
}

const QUON: &str = r#"{
  "model": {"kind": "quon", "q": 0.5, "use_n0_similarity": true},
  "dim": 40, "depth": 30, "margin": 2,
  "suites": ["battery", "theorem1", "riesz", "coherent", "moments"],
  "coherent_grid": [[0.5, 0.0], [0.2, 0.3]]
}"#;

#[test]
fn quon_config_passes_every_suite() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("quon.json");
    let out = dir.path().join("report.json");
    write(&cfg, QUON);
    let o = nlpb(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "stdout: {}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: pass"));
    let report = read_report(&out);
    assert_eq!(report["version"], "nlpb-report/1");
    assert_eq!(report["verdicts"]["overall"], "pass");
    for suite in ["battery", "theorem1", "riesz", "coherent", "moments"] {
        assert_eq!(report["verdicts"][suite], "pass", "{suite}");
    }
    let ids: Vec<&str> = report["suites"]["battery"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"eq56-lower-phi") && ids.contains(&"eq513-commutator"));
}

#[test]
fn f_deformed_riesz_exits_one() {
    let o = nlpb(&[
        "verify", "--model", "f_deformed", "--param", "f=[0,1]", "--dim", "30", "--depth", "20",
        "--suite", "riesz", "--json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["suites"]["riesz"]["extras"]["diagnostic"]["verdict"], "non-regular-indicated");
}

#[test]
fn depth_beyond_dim_is_a_config_error() {
    let o = nlpb(&["verify", "--model", "quon", "--dim", "10", "--depth", "12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("depth"));
    let o = nlpb(&["verify", "--tolerance", "battery=-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nlpb(&["verify", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("quon.json");
    write(&cfg, QUON);
    let o = nlpb(&[
        "verify", "--config", cfg.to_str().unwrap(), "--suite", "battery", "--param", "q=0.3", "--dim", "30",
        "--depth", "20", "--tolerance", "battery=1e-8", "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["config"]["model"]["q"], 0.3);
    assert_eq!(report["config"]["dim"], 30);
    assert_eq!(report["config"]["tolerances"]["battery"], 1e-8);
    assert!(report["suites"].get("moments").is_none());
}

#[test]
fn reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("quon.json");
    write(&cfg, QUON);
    let mut bytes = Vec::new();
    let out = dir.path().join("report.json");
    for _ in 0..2 {
        let o = nlpb(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        bytes.push(fs::read(&out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn list_models_table_and_json() {
    let o = nlpb(&["list-models"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(rows.len(), 5);
    for kind in ["f_deformed", "h_deformed", "similarity_diagonal", "two_by_two", "quon"] {
        assert!(text.contains(kind), "{kind}");
    }

    let o = nlpb(&["list-models", "--json"]);
    let rows: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 5);

    let o = nlpb(&["list-models", "qon"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean: quon"));
}

#[test]
fn coherent_command() {
    let o = nlpb(&[
        "coherent", "--model", "similarity_diagonal", "--param", r#"eps={"type":"identity"}"#, "--param",
        "s=[1.0]", "--dim", "100", "--z", "0.5", "--z", "1,1", "--z", "2,0", "--json",
    ]);
    // a single weight for 100 levels is rejected by the factory: a verdict, not a crash
    assert_eq!(o.status.code(), Some(1));

    let o = nlpb(&[
        "coherent", "--model", "h_deformed", "--param", "h=[1]", "--dim", "100", "--z", "0.5", "--z", "1,1",
        "--z", "2,0", "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let states = report["suites"]["coherent"]["extras"]["states"].as_array().unwrap();
    assert_eq!(states.len(), 3);
    for s in states {
        let h = s["heisenberg"].as_array().unwrap();
        assert!((h[0].as_f64().unwrap() - 0.5).abs() < 1e-8);
    }

    let o = nlpb(&["coherent", "--model", "quon", "--z", "1.5,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("coherent-build"));
}

#[test]
fn moments_command() {
    let args = |r: &str| {
        nlpb(&[
            "moments", "--model", "h_deformed", "--param", "h=[1]", "--dim", "30", "--K", "10", "--R", r,
            "--nodes", "400", "--json",
        ])
    };
    let o = args("6");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let measure = report["suites"]["moments"]["extras"]["measure"].as_array().unwrap();
    assert!(measure.iter().all(|p| p.as_array().unwrap().len() == 2));

    let o = args("1");
    assert_eq!(o.status.code(), Some(1));

    let o = nlpb(&["moments", "--model", "h_deformed", "--param", "h=[1]", "--K", "10", "--nodes", "5"]);
    assert_eq!(o.status.code(), Some(1));
}
