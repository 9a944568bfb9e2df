use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn book(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../book/src").join(rel)
}

fn run(config: &str, out: &Path) -> Output {
    let path = out.join("config.json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_valdist"))
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(out.join("reports"))
        .output()
        .unwrap()
}

fn report(out: &Path, task: &str) -> Value {
    let text = fs::read_to_string(out.join("reports").join(format!("{task}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_config_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        r#"{ "expressions": { "f": "z^2" },
             "tasks": [{ "kind": "eval", "name": "e", "expr": "f", "points": [[1, 1]], "order": 2 }] }"#,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path(), "e");
    assert_eq!(r["status"], "ok");
    assert_eq!(r["kind"], "eval");
    let d = &r["result"][0]["derivatives"];
    assert_eq!(d.as_array().unwrap().len(), 3);
}

#[test]
fn linear_family_marty_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        r#"{ "families": { "lin": { "base": "n*z", "parameter": "n", "range": [1, 12] } },
             "tasks": [{ "kind": "marty", "name": "m", "family": "lin",
                         "region": { "disk": { "center": 0, "radius": 0.5 } } }] }"#,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path(), "m");
    let members = r["result"].as_array().unwrap();
    assert_eq!(members.len(), 12);
    for (i, m) in members.iter().enumerate() {
        let want = (i + 1) as f64;
        let est = m["estimate"].as_f64().unwrap();
        assert!((est - want).abs() <= 1e-12 * want, "n = {want}: {est}");
    }
    let csv = fs::read_to_string(dir.path().join("reports/m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("parameter_re,parameter_im,estimate,re_z,im_z"));
    for (line, m) in lines.zip(members) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[2], m["estimate"].as_f64().unwrap());
    }
}

#[test]
fn undeclared_name_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(r#"{ "tasks": [{ "kind": "nevanlinna", "name": "n", "expr": "g" }] }"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("tasks[0].expr") && msg.contains('g'), "{msg}");
    assert!(!dir.path().join("reports/n.json").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        r#"{ "expressions": { "f": "z" },
             "tasks": [{ "kind": "nevanlinna", "name": "n", "expr": "f", "radius": 3 }] }"#,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radius"), "{}", stderr(&o));
}

#[test]
fn parse_error_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(r#"{ "expressions": { "f": "z +* 1" }, "tasks": [] }"#, dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_writes_stub_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        r#"{ "expressions": { "c": "0.5", "f": "z" },
             "tasks": [
               { "kind": "order", "name": "flat", "expr": "c", "radii": [1, 10, 100] },
               { "kind": "nevanlinna", "name": "after", "expr": "f", "radii": [2] } ] }"#,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let stub = report(dir.path(), "flat");
    assert_eq!(stub["status"], "error");
    assert_eq!(stub["error"]["kind"], "InsufficientGrowth");
    assert!(stub.get("result").is_none());
    assert_eq!(report(dir.path(), "after")["status"], "ok");
}

#[test]
fn nevanlinna_csv_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        r#"{ "expressions": { "f": "1/(z*(z - 1))" },
             "tasks": [{ "kind": "nevanlinna", "name": "n", "expr": "f", "radii": [0.5, 2, 4] }] }"#,
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path(), "n");
    let csv = fs::read_to_string(dir.path().join("reports/n.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,m,N,Nbar,T,err"));
    let rows = r["result"]["rows"].as_array().unwrap();
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), rows.len());
    for (line, row) in body.iter().zip(rows) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        for (i, key) in ["r", "m", "N", "Nbar", "T", "err"].iter().enumerate() {
            assert_eq!(cols[i], row[key].as_f64().unwrap(), "{key}");
        }
    }
}

fn validator(name: &str) -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(&fs::read_to_string(book(&format!("schema/{name}"))).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn example_config_matches_schema() {
    let v = validator("config.schema.json");
    let cfg: Value = serde_json::from_str(&fs::read_to_string(book("configs/example.json")).unwrap()).unwrap();
    let errors: Vec<String> = v.iter_errors(&cfg).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn reports_match_schema() {
    let v = validator("report.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_valdist"))
        .arg("run")
        .arg(book("configs/example.json"))
        .arg("--out")
        .arg(dir.path())
        .arg("--parallel")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut seen = 0;
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let inst: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            let errors: Vec<String> = v.iter_errors(&inst).map(|e| e.to_string()).collect();
            assert!(errors.is_empty(), "{}: {errors:?}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, 12);
}

#[test]
fn parallel_and_serial_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, parallel) in [(&a, false), (&b, true)] {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_valdist"));
        cmd.arg("run").arg(book("configs/example.json")).arg("--out").arg(dir.path());
        if parallel {
            cmd.arg("--parallel");
        }
        assert_eq!(cmd.status().unwrap().code(), Some(0));
    }
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{}", name.to_string_lossy());
    }
}
