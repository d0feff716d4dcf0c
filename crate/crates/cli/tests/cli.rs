//! Exit codes and report shape of the command-line tool.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_planar-dilation"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn boundary_operator_is_contractive() {
    let job = r#"{"schema":1,"domain":{"kind":"disk"},
        "operator":{"kind":"a_boundary","z1":[0.3,0],"z2":[-0.2,0.1],"mu":[1,0]},
        "sampling":{"sample_count":300,"seed":1}}"#;
    let out = run(&["contract"], job);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "contract");
    assert_eq!(r["result"]["verdict"]["contractive"], true);
    assert!(r["result"]["von_neumann"]["max_norm"].as_f64().unwrap() <= 1.0 + 1e-9);
    assert_eq!(r["parameters"]["truncation"], 200);
    assert!(r["tolerances"]["critical_slack"].is_number());
}

#[test]
fn targets_outside_the_ball_are_infeasible() {
    let job = r#"{"schema":1,"mode":"feasibility","domain":{"kind":"disk"},
        "nodes":[[0.1,0],[0.4,0.2]],"targets":[[1.2,0],[0,0]]}"#;
    let out = run(&["pick"], job);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["negative"], true);
    assert_eq!(r["result"]["feasible"], false);
    assert!(r["result"]["witness"]["eigenvalue"].as_f64().unwrap() < 0.0);
}

#[test]
fn disk_dilation_meets_tolerance() {
    let job = r#"{"schema":1,"domain":{"kind":"disk"},"truncation":60,
        "model":{"kind":"pair","z1":[0.3,0],"z2":[-0.2,0.1],"mu":[0.7,0]},
        "verify":{"sample_count":20,"seed":4}}"#;
    let out = run(&["dilate"], job);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert!(r["result"]["witness"]["defect"].as_f64().unwrap() <= 1e-6);
    assert!(r["result"]["verify_defect"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["result"]["witness"]["vectors"].as_array().unwrap().len(), 0);
}

#[test]
fn malformed_jobs_point_at_the_field() {
    let cases = [
        (r#"{"schema":1,"domain":{"kind":"disk"},"points":[[[0.1,0],[0.2,"x"]]]}"#, "kernel", "/points/0/1/1"),
        (r#"{"schema":1,"domain":{"kind":"disk"},"operator":{"kind":"a_boundary","z1":[0.3,0],"z2":[0.1,0],"mu":[1,0]},"sampling":{"sample_count":5}}"#, "contract", "/sampling"),
        (r#"{"schema":1,"domain":{"kind":"torus"},"matrix":[]}"#, "factorize", "/domain"),
        (r#"{"domain":{"kind":"disk"}}"#, "kernel", "/schema"),
        (r#"{"schema":1,"command":"pick","domain":{"kind":"disk"}}"#, "kernel", "/command"),
        ("{not json", "kernel", "invalid JSON"),
    ];
    for (job, cmd, pointer) in cases {
        let out = run(&[cmd], job);
        assert_eq!(out.status.code(), Some(1), "{job}");
        assert!(stderr(&out).contains(pointer), "{job}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn ill_conditioned_operator_is_a_numerical_failure() {
    let job = r#"{"schema":1,"domain":{"kind":"disk"},"matrix":[[[0.3,0],[0,0]],[[1,0],[0.3000000001,0]]]}"#;
    let out = run(&["factorize"], job);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn seed_override_replaces_the_job_seed() {
    let job = r#"{"schema":1,"domain":{"kind":"disk"},"matrix":[[[0.3,0],[0,0]],[[0.4,0],[-0.2,0.1]]],
        "levels":[2],"sampling":{"sample_count":50,"seed":3}}"#;
    let a = report(&run(&["opspace-experiment"], job));
    let b = report(&run(&["opspace-experiment", "--seed-override", "3"], job));
    let c = report(&run(&["opspace-experiment", "--seed-override", "99"], job));
    assert_eq!(a, b);
    assert_eq!(c["parameters"]["sampling"]["seed"], 99);
    assert_ne!(a["result"]["bounds"], c["result"]["bounds"]);
}

#[test]
fn csv_is_written_next_to_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("theta.csv");
    let out_path = dir.path().join("report.json");
    let job = r#"{"schema":1,"z1":[0.3,0],"z2":[-0.2,0.1],"mu":[0.4,0],"boundary_points":8}"#;
    let out = run(&["charfn", "--csv", csv.to_str().unwrap(), "--out", out_path.to_str().unwrap()], job);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("re_u,im_u,re_t11,im_t11"));
    assert_eq!(text.lines().count(), 9);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(r["result"]["inner_defect"].as_f64().unwrap() < 1e-10);
}

#[test]
fn commands_without_tables_reject_csv() {
    let job = r#"{"schema":1,"mode":"extremal-t","domain":{"kind":"disk"},"z":[0.4,0]}"#;
    let out = run(&["pick", "--csv", "/dev/null"], job);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}
