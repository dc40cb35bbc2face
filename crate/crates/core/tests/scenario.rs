use std::path::Path;
use std::process::Command;
use transversal_psido::scenario::{parse_scenario, ReportIndex, Scenario, Task};

fn transcalc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_transcalc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn index(out: &Path) -> ReportIndex {
    serde_json::from_str(&std::fs::read_to_string(out.join("index.json")).unwrap()).unwrap()
}

const HEAT: &str = r#"{
  "schema_version": 1,
  "model": { "kind": "product", "p": 1, "q": 1 },
  "tasks": [ { "task": "heat" }, { "task": "zeta_table", "window": [0.2, 0.8] } ]
}"#;

#[test]
fn heat_scenario_writes_reports_in_task_order() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "heat.json", HEAT);
    let out = dir.path().join("out");
    let o = transcalc(&["run", &sc, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let idx = index(&out);
    let names: Vec<&str> = idx.tasks.iter().map(|t| t.task.as_str()).collect();
    assert_eq!(names, ["heat", "zeta_table"]);
    assert_eq!(idx.tasks[0].artifacts, ["00_heat/heat.json", "00_heat/heat_samples.csv"]);
    assert!(idx.tasks[1].artifacts.contains(&"01_zeta_table/poles.json".to_string()));
    assert!(idx.tasks[1].artifacts.contains(&"01_zeta_table/zeta_samples.csv".to_string()));
    let heat: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("00_heat/heat.json")).unwrap()).unwrap();
    let a0 = heat["a0_fit"].as_f64().unwrap();
    assert!((a0 - std::f64::consts::PI.sqrt()).abs() < 1e-2, "{a0}");
    let csv = std::fs::read_to_string(out.join("00_heat/heat_samples.csv")).unwrap();
    assert!(csv.starts_with("t,trace,fit\n"));
    assert_eq!(csv.lines().count(), 25);
}

#[test]
fn empty_task_list_gives_empty_index() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "empty.json", r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 }, "tasks": [] }"#);
    let out = dir.path().join("out");
    let o = transcalc(&["run", &sc, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(index(&out).tasks.is_empty());
}

#[test]
fn rational_kronecker_slope_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "kr.json",
        r#"{ "schema_version": 1, "model": { "kind": "kronecker", "slope": 0.75 }, "operator": { "named": { "name": "first_order_dirac" } } }"#,
    );
    for cmd in ["validate", "run"] {
        let o = transcalc(&[cmd, &sc, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("rational"));
    }
}

#[test]
fn schema_errors_report_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "bad.json",
        r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 }, "tasks": [ { "task": "heat", "kernel": { "kind": "unit" } } ] }"#,
    );
    let o = transcalc(&["validate", &sc]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(err.contains("tasks[0]"), "{err}");
    let e = parse_scenario(r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 }, "settings": { "grid": { "nz": 3 } } }"#)
        .unwrap_err()
        .to_string();
    assert!(e.contains("settings.grid"), "{e}");
}

#[test]
fn static_preconditions_are_named() {
    let s = parse_scenario(r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 }, "tasks": [ { "task": "sobolev", "s": 0.5, "k": 2.0 } ] }"#).unwrap();
    let e = s.validate().unwrap_err().to_string();
    assert!(e.contains("tasks[0] (sobolev)"), "{e}");
    let s = parse_scenario(r#"{ "schema_version": 2, "model": { "kind": "product", "p": 1, "q": 1 } }"#).unwrap();
    assert!(s.validate().is_err());
    let s = parse_scenario(
        r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 }, "tasks": [ { "task": "zeta_table", "window": [1.0, 0.0] } ] }"#,
    )
    .unwrap();
    assert!(s.validate().unwrap_err().to_string().contains("zeta_table"));
}

#[test]
fn numeric_task_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // critical order -q with an even density: the canonical trace is obstructed
    let sc = write(
        dir.path(),
        "tr.json",
        r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 },
             "tasks": [ { "task": "tr", "symbol": { "weight": { "order": -1.0 } } }, { "task": "parametrix" } ] }"#,
    );
    let out = dir.path().join("out");
    let o = transcalc(&["run", &sc, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let idx = index(&out);
    assert_eq!(idx.tasks[0].status, "failed");
    assert!(idx.tasks[0].error.as_deref().unwrap().contains("obstruction"));
    assert_eq!(idx.tasks[1].status, "ok");
}

#[test]
fn scenario_round_trip_is_idempotent() {
    let s: Scenario = parse_scenario(HEAT).unwrap();
    let once = serde_json::to_string(&s).unwrap();
    let again = serde_json::to_string(&parse_scenario(&once).unwrap()).unwrap();
    assert_eq!(once, again);
    assert!(matches!(s.tasks[0], Task::Heat { .. }));
}

#[test]
fn seed_override_and_version() {
    let o = transcalc(&["version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("transcalc "));
    let o = transcalc(&["list-models"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("kronecker"));
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "e.json", r#"{ "schema_version": 1, "model": { "kind": "product", "p": 1, "q": 1 } }"#);
    let out = dir.path().join("out");
    assert!(transcalc(&["run", &sc, "--seed", "99", "--threads", "2", "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(index(&out).seed, 99);
}
