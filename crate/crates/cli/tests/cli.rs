use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use varns_core::grid::{GridSpec, Topology};
use varns_core::harness::{write_field, CorpusField};

fn varns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varns"))
        .args(args)
        .env("VARNS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn norm_of_a_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::interval(-8.0, 8.0, 512, Topology::Truncated).unwrap();
    let field = dir.path().join("f.vlpf");
    write_field(&field, &CorpusField::Scalar(g.sample(|x| (-x[0] * x[0]).exp()))).unwrap();
    let exp = dir.path().join("p.json");
    std::fs::write(&exp, r#"{"family": "constant", "params": [2]}"#).unwrap();

    let o = varns(&["norm", "--field", p(&field), "--exponent", p(&exp)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    // int exp(-2x^2) = sqrt(pi/2)
    let exact = (std::f64::consts::PI / 2.0).sqrt().sqrt();
    assert!((v["value"].as_f64().unwrap() - exact).abs() < 1e-7);

    let o = varns(&["norm", "--field", p(&field), "--exponent", p(&exp), "--mixed", "3"]);
    assert_eq!(code(&o), 0);
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(m["value"].as_f64().unwrap() >= v["value"].as_f64().unwrap());

    let o = varns(&["norm", "--field", p(&dir.path().join("missing.vlpf")), "--exponent", p(&exp)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn campaign_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (out, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    let o = varns(&[
        "campaign", "--target", "maximal", "--corpus-size", "5", "--refinement-levels", "2", "--out", p(&out),
        "--csv", p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["schema"], "varns-report/1");
    assert_eq!(r["kind"], "campaign");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 5 * 2);

    // the observed ratio is at least 1, so this bound is violated
    let o = varns(&["campaign", "--target", "maximal", "--corpus-size", "3", "--refinement-levels", "1", "--bound", "0.5"]);
    assert_eq!(code(&o), 1);

    let o = varns(&["campaign", "--target", "nonsense"]);
    assert_eq!(code(&o), 2);
    let o = varns(&["campaign", "--target", "maximal", "--corpus-size", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_runs_a_list_of_campaigns_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"campaigns": [{"target": "embedding", "corpus_size": 50}, {"target": "lemma_unit_norm"}]}"#,
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let o = varns(&["verify", "--config", p(&cfg), "--out", p(&out), "--set", "corpus_size=4", "--set", "refinement_levels=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["kind"], "campaigns");
    let reports = r["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["evaluations"].as_array().unwrap().len() == 4));

    let o = varns(&["verify", "--config", p(&dir.path().join("none.json")), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_small_and_large_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"resolution": 8, "steps": 8, "initial": {"kind": "taylor-green", "amplitude": 0.5}}"#,
    )
    .unwrap();
    let (out, csv) = (dir.path().join("s.json.out"), dir.path().join("iters.csv"));
    let o = varns(&["solve", "--config", p(&cfg), "--out", p(&out), "--csv", p(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["kind"], "solver");
    assert_eq!(r["status"], "converged");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("iter,E_norm,increment_norm,residual"));
    assert!(rows.next().unwrap().starts_with("0,"));

    let o = varns(&["solve", "--config", p(&cfg), "--out", p(&out), "--set", r#"initial={"kind":"taylor-green","amplitude":500}"#]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("smallness"));

    let o = varns(&["solve", "--config", p(&cfg), "--out", p(&out), "--set", "bogus=1"]);
    assert_eq!(code(&o), 2);
}
