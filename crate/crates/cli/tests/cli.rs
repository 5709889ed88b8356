use std::fs;
use std::path::PathBuf;

use ranslice_cli::{execute, EXIT_INVALID, EXIT_OK, EXIT_RUNTIME};

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .display()
        .to_string()
}

fn exec(args: &[&str]) -> i32 {
    execute(std::iter::once("ranslice").chain(args.iter().copied()))
}

const BROKEN: &str = r#"
[cell]
num_rbs = 25
[[tenant]]
id = 1
dedicated_rbs = 26
[[tenant.subslice]]
id = 1
class = "gbr"
"#;

#[test]
fn validate_accepts_every_shipped_scenario() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        assert_eq!(
            exec(&["validate", "--scenario", path.to_str().unwrap()]),
            EXIT_OK,
            "{}",
            path.display()
        );
    }
}

#[test]
fn broken_scenario_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("broken.toml");
    fs::write(&file, BROKEN).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        exec(&["validate", "--scenario", file.to_str().unwrap()]),
        EXIT_INVALID
    );
    assert_eq!(
        exec(&[
            "run",
            "--scenario",
            file.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_INVALID
    );
    assert!(!out.exists());
}

#[test]
fn missing_file_is_a_runtime_failure() {
    assert_eq!(
        exec(&["run", "--scenario", "/nonexistent/x.toml"]),
        EXIT_RUNTIME
    );
}

#[test]
fn unknown_policy_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("single_ue_cqi15.toml");
    let out = tmp.path().to_str().unwrap();
    assert_eq!(
        exec(&[
            "compare",
            "--scenario",
            &s,
            "--policies",
            "fancy",
            "--out",
            out
        ]),
        EXIT_INVALID
    );
}

#[test]
fn run_writes_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let s = scenario("single_ue_cqi15.toml");
    assert_eq!(
        exec(&[
            "run",
            "--scenario",
            &s,
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with(
        "tenant,subslice,throughput_bps,mean_delay_ms,p95_delay_ms,gbr_satisfaction,mean_grant_rbs"
    ));
    assert!(summary.contains("\ncell,-,23325000.000,"));
    let timeline = fs::read_to_string(out.join("timeline.csv")).unwrap();
    // one sub-slice row and one cell row per TTI
    assert_eq!(timeline.lines().count(), 1 + 2 * 10_000);
    let json = fs::read_to_string(out.join("run.json")).unwrap();
    assert!(json.contains("\"seed\": 3"));
    assert!(json.contains("\"version\""));
}

#[test]
fn compare_rows_equal_per_policy_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenario("sharing_benefit.toml");
    let out = tmp.path();
    let code = exec(&[
        "compare",
        "--scenario",
        &s,
        "--policies",
        "static-single,shared-multi",
        "--seed",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let compare = fs::read_to_string(out.join("compare.csv")).unwrap();
    let mut lines = compare.lines();
    assert!(lines.next().unwrap().starts_with("policy,tenant,subslice,"));
    let rows: Vec<&str> = lines.collect();
    for policy in ["static-single", "shared-multi"] {
        let summary = fs::read_to_string(out.join(policy).join("summary.csv")).unwrap();
        let expected: Vec<String> = summary
            .lines()
            .skip(1)
            .map(|l| format!("{policy},{l}"))
            .collect();
        let got: Vec<&str> = rows
            .iter()
            .copied()
            .filter(|r| r.starts_with(&format!("{policy},")))
            .collect();
        assert_eq!(got, expected);
        let json = fs::read_to_string(out.join(policy).join("run.json")).unwrap();
        assert!(json.contains("\"seed\": 8"));
    }
}
