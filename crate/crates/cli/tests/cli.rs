use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dba(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dba"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DBA_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Lines of a CSV artifact after the leading config comment.
fn csv_lines(path: impl AsRef<Path>) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: {"));
    lines.map(str::to_string).collect()
}

#[test]
fn generators_are_deterministic_and_refuse_overwrites() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&dba(&["gen-airis-tab", "--n", "4000", "--seed", "7", "--out", "a.csv"], d));
    ok(&dba(&["gen-airis-tab", "--n", "4000", "--seed", "7", "--out", "b.csv"], d));
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
    let text = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(text.lines().count(), 4001);
    assert_eq!(text.lines().next().unwrap(), "PL,PW,SL,SW,C,label,attr_PL,attr_PW,attr_SL,attr_SW,attr_C");
    let meta = read_json(d.join("a.json"));
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["ranges"]["PW"], serde_json::json!([0.1, 0.7]));
    let balance = meta["class_balance"].as_f64().unwrap();
    assert!((0.44..0.51).contains(&balance), "{balance}");

    assert!(!dba(&["gen-airis-tab", "--n", "10", "--out", "a.csv"], d).status.success());
    ok(&dba(&["gen-airis-tab", "--n", "10", "--out", "a.csv", "--force"], d));

    ok(&dba(&["gen-moons", "--n", "1000", "--noise", "0.15", "--seed", "1", "--out", "m.csv"], d));
    let meta = read_json(d.join("m.json"));
    assert_eq!(meta["noise"], 0.15);
    assert_eq!(meta["class_balance"], 0.5);
}

#[test]
fn explain_writes_one_document_per_point_and_method() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = dba(
        &["explain", "--seed", "7", "--point", "3,11", "--method", "dba-tab,lime-tab", "--output-dir", "ex", "--dump-sample"],
        d,
    );
    ok(&out);
    let grid: Vec<f64> = {
        let mut g: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        g.extend((2..=20).map(|i| i as f64 * 0.5));
        g
    };
    for p in [3, 11] {
        let doc = read_json(d.join(format!("ex/explain-dba-tab-{p}.json")));
        assert_eq!(doc["status"], "ok");
        assert_eq!(doc["config"]["seed"], 7);
        let r = doc["result"]["explanation"]["chosen_r"].as_f64().unwrap();
        assert!(grid.iter().any(|g| (g - r).abs() < 1e-12), "r = {r}");
        assert_eq!(doc["result"]["trials"].as_array().unwrap().len(), grid.len());
        assert_eq!(doc["result"]["explanation"]["coefficients"].as_array().unwrap().len(), 5);
        assert!(doc["result"]["detection"]["boundary_point"].is_array());
        assert!(doc["result"]["detection"]["bisected_point"].is_array());

        let lime = read_json(d.join(format!("ex/explain-lime-tab-{p}.json")));
        assert!(lime["result"]["explanation"]["r2"].is_number());

        let sample = csv_lines(d.join(format!("ex/explain-dba-tab-{p}-sample.csv")));
        assert_eq!(sample[0], "PL,PW,SL,SW,C,label");
        assert_eq!(sample.len(), 501);
    }
}

#[test]
fn invalid_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dba(&["explain", "--method", "shap"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown method"));
}

#[test]
fn bad_configs_are_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("typo.json"), r#"{"schema_version": 1, "pionts": 5}"#).unwrap();
    std::fs::write(d.join("old.json"), r#"{"schema_version": 0}"#).unwrap();
    for cfg in ["typo.json", "old.json"] {
        let out = dba(&["evaluate", "--config", cfg, "--output-dir", "x"], d);
        assert!(!out.status.success(), "{cfg} accepted");
    }
    assert!(!d.join("x/report.json").exists());
}

#[test]
fn evaluation_is_reproducible_and_tabulated() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.json"), r#"{"schema_version": 1, "seed": 1, "points": 3, "lime": {"m": 300}}"#).unwrap();
    for name in ["a", "b"] {
        std::fs::create_dir(d.join(name)).unwrap();
        let cfg = d.join("run.json");
        let args = ["evaluate", "--config", cfg.to_str().unwrap(), "--points", "6", "--seed", "7", "--output-dir", "out"];
        ok(&dba(&args, &d.join(name)));
    }
    let a = std::fs::read_to_string(d.join("a/out/report.json")).unwrap();
    assert!(a == std::fs::read_to_string(d.join("b/out/report.json")).unwrap(), "reports differ");

    let report = read_json(d.join("a/out/report.json"));
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["config"]["points"], 6);
    assert_eq!(report["config"]["lime"]["m"], 300);
    assert_eq!(report["report"]["points"].as_array().unwrap().len(), 6);

    let table = csv_lines(d.join("a/out/table.csv"));
    assert_eq!(
        table[0],
        "Method,DBA Fidelity,LIME R2-Fidelity,Class Balance,Decision Boundary Distance,Failure to Cross,Cosine Similarity-,Cosine Similarity+"
    );
    assert_eq!(table.len(), 3);
    assert!(table[1].starts_with("dba-tab,") && table[2].starts_with("lime-tab,"));

    for m in ["dba-tab", "lime-tab"] {
        let curves = csv_lines(d.join(format!("a/out/curves-{m}.csv")));
        assert_eq!(curves[0], "method,point,t,probability");
        assert!(curves[1..].iter().all(|l| l.starts_with(&format!("{m},"))));
        assert!(curves.len() > 6);
    }
}

#[test]
fn output_dir_comes_from_the_environment_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_dba"))
        .args(["sweep-r", "--point", "0", "--seed", "2"])
        .current_dir(d)
        .env("DBA_OUTPUT_DIR", d.join("env-out"))
        .output()
        .unwrap();
    ok(&out);
    let sweep = csv_lines(d.join("env-out/sweep.csv"));
    assert_eq!(sweep[0], "point,method,r,status,distance,class_balance,chosen");
    assert_eq!(sweep.len(), 29);
    assert_eq!(sweep.iter().filter(|l| l.ends_with(",true")).count(), 1);
}

#[test]
fn stability_flags_lossy_codecs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&dba(&["stability", "--points", "5", "--output-dir", "id"], d));
    let id = read_json(d.join("id/stability.json"));
    assert_eq!(id["label_stability"], 1.0);
    assert_eq!(id["probability_stability"], 0.0);

    ok(&dba(&["stability", "--codec", "affine", "--latent-dim", "2", "--points", "5", "--output-dir", "aff"], d));
    let aff = read_json(d.join("aff/stability.json"));
    assert!(aff["label_stability"].as_f64().unwrap() < 1.0);
    assert_eq!(aff["config"]["codec"]["latent_dim"], 2);
}

#[test]
fn shipped_config_schema_matches_the_config_type() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/run-config.schema.json")).unwrap())
            .unwrap();
    assert_eq!(schema["additionalProperties"], false);
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&dba(&["stability", "--points", "1", "--output-dir", "o"], d));
    let cfg = read_json(d.join("o/stability.json"))["config"].clone();
    let mut written: Vec<&String> = cfg.as_object().unwrap().keys().collect();
    let mut declared: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    written.sort();
    declared.sort();
    assert_eq!(written, declared);
}
