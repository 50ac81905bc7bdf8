use std::path::Path;
use std::process::{Command, Output};

fn rssl(args: &[&str], dir: &Path) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_rssl"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "rssl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn construct_then_dims() {
    let dir = tempfile::tempdir().unwrap();
    rssl(&["construct", "gap", "--n", "4", "-o", "gap4.json"], dir.path());
    let out = rssl(&["dims", "--input", "gap4.json", "--json"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["vc_u"], 0);
    assert_eq!(report["rs_u"], 4);
    assert!(report.get("witnesses").is_none());
    let out = rssl(&["dims", "--input", "gap4.json", "--json", "--witnesses"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["witnesses"]["rs_u"]["points"].as_array().unwrap().len(), 4);
    let table = rssl(&["dims", "--input", "gap4.json", "--table"], dir.path());
    assert!(String::from_utf8_lossy(&table.stdout).contains("rs_u"));
}

#[test]
fn dims_guard_can_be_lifted() {
    let dir = tempfile::tempdir().unwrap();
    rssl(&["construct", "allfns", "--m", "6", "-o", "big.json"], dir.path());
    let refused = Command::new(env!("CARGO_BIN_EXE_rssl"))
        .args(["dims", "--input", "big.json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!refused.status.success());
    assert!(String::from_utf8_lossy(&refused.stderr).contains("too large"));
    let out = rssl(&["dims", "--input", "big.json", "--json", "--override-guard"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["vc"], 13);
    assert_eq!(report["vc_u"], 1);
}

#[test]
fn learn_writes_predictor_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    rssl(&["construct", "gap", "--n", "4", "-o", "inst.json"], d);
    rssl(
        &[
            "learn", "grass", "--input", "inst.json", "--ml", "30", "--mu", "400", "--epsilon", "0.1",
            "--delta", "0.1", "--seed", "7", "--emit-provenance", "prov.json", "-o", "pred.json",
        ],
        d,
    );
    let pred = json(&d.join("pred.json"));
    assert_eq!(pred["outputs"].as_array().unwrap().len(), 12);
    assert_eq!(pred["provenance"]["learner"], "grass");
    assert_eq!(json(&d.join("prov.json"))["learner"], "grass");

    std::fs::write(d.join("s.json"), "[[0, 1], [5, 0], [6, 1]]").unwrap();
    for learner in ["partial-realizable", "robust-supervised", "robust-01"] {
        let out = rssl(&["learn", learner, "--input", "inst.json", "--sample", "s.json", "--seed", "1"], d);
        let pred: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(pred["outputs"].as_array().unwrap().len(), 12, "{learner}");
    }
    let out = rssl(
        &["learn", "known-support", "--input", "inst.json", "--sample", "s.json", "--support", "0,5,6"],
        d,
    );
    let pred: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(pred["provenance"]["learner"], "known-support");
}

#[test]
fn family_directory_has_manifest() {
    let dir = tempfile::tempdir().unwrap();
    rssl(&["construct", "improper", "--m", "2", "-o", "fam"], dir.path());
    let manifest = json(&dir.path().join("fam/manifest.json"));
    let members = manifest["members"].as_array().unwrap();
    assert_eq!(members.len(), 15);
    for m in members {
        assert!(dir.path().join("fam").join(m["file"].as_str().unwrap()).exists());
    }
    rssl(&["construct", "agnostic-sigma", "--k", "2", "--alpha", "0.5", "-o", "sig"], dir.path());
    assert_eq!(json(&dir.path().join("sig/manifest.json"))["members"].as_array().unwrap().len(), 4);
}

#[test]
fn bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = rssl(&["bounds", "--kappa", "4", "--m", "64,1024"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kappa,m,delta,empirical_risk,graepel,bernstein");
    assert_eq!(lines.len(), 3);
}

#[test]
fn experiment_config_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    rssl(&["construct", "gap", "--n", "3", "-o", "g3.json"], d);
    std::fs::write(
        d.join("exp.json"),
        r#"{"instance": "g3.json", "learner": "robust-supervised", "epsilon": 0.1, "delta": 0.1,
            "trials": 20, "seed": 3, "search": {"doubling": {"axis": "labeled", "max": 64}},
            "output": "a.csv"}"#,
    )
    .unwrap();
    rssl(&["experiment", "run", "--config", "exp.json"], d);
    rssl(&["experiment", "run", "--config", "exp.json", "-o", "b.csv"], d);
    let a = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(d.join("b.csv")).unwrap());
    assert!(a.starts_with("family,n,learner,m_l,m_u,trials,successes,ci_low,ci_high,median_risk,seed\n"));
    assert!(a.lines().skip(1).all(|l| l.starts_with("g3,9,robust-supervised,") && l.ends_with(",3")));
}

#[test]
fn separation_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    rssl(
        &[
            "experiment", "separation", "--n", "2,3", "--epsilon", "0.2", "--delta", "0.2", "--trials", "20",
            "--seed", "7", "-o", "sep.csv",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("sep.csv")).unwrap();
    assert!(text.contains(",grass,"));
    assert!(text.contains(",robust-supervised,"));
}

#[test]
fn agnostic_and_proper_bound_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = rssl(
        &["experiment", "agnostic", "--k", "2", "--alpha", "0.5", "--ml", "10", "--mu", "50", "--trials", "10"],
        dir.path(),
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["members"].as_array().unwrap().len(), 4);
    let out = rssl(&["experiment", "proper-bound", "--m", "1"], dir.path());
    let bound: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(bound["sequences"], 3);
}
