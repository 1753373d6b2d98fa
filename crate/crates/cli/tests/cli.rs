use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn drms() -> PathBuf {
    root().join("crates/drm/fixtures/drms_business_model.f4ms")
}

fn core_fixture(name: &str) -> PathBuf {
    root().join("crates/core/fixtures").join(format!("{name}.f4ms"))
}

fn mixsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixsys")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = mixsys(&["validate", s(&drms())]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(ok.stdout.is_empty() && ok.stderr.is_empty());

    let bad = mixsys(&["validate", s(&core_fixture("tag_mismatch"))]);
    assert_eq!(bad.status.code(), Some(1));
    let lines: Vec<String> = stderr(&bad).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].contains("TagMismatch"));
    assert!(lines[0].starts_with(&format!("{}:", s(&core_fixture("tag_mismatch")))));

    let none = mixsys(&["validate"]);
    assert_eq!(none.status.code(), Some(2));
    assert!(stderr(&none).contains("Usage"));
    assert_eq!(mixsys(&[]).status.code(), Some(2));
}

#[test]
fn syntax_errors_are_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("broken.f4ms");
    std::fs::write(&file, "{\n  name: \"x\",\n  components: [\n").unwrap();
    let out = mixsys(&["validate", s(&file)]);
    assert_eq!(out.status.code(), Some(1));
    for line in stderr(&out).lines() {
        let parts: Vec<&str> = line.splitn(4, ':').collect();
        assert_eq!(parts.len(), 4, "{line}");
        assert!(parts[1].parse::<u32>().is_ok() && parts[2].parse::<u32>().is_ok(), "{line}");
    }
}

#[test]
fn run_writes_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trace");
    let b = dir.path().join("b.trace");
    for path in [&a, &b] {
        let out = mixsys(&["run", s(&drms()), "--mapping", "all-sw", "--seed", "1", "--trace", s(path)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert_eq!(stdout(&out), "sim_time=40.000000\n");
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let protocol = ["content_request", "info_demand", "user_info", "license_request", "license", "authorization"];
    let tags: Vec<&str> = text
        .lines()
        .filter(|l| l.split('\t').nth(1) == Some("MessageTransfer"))
        .filter_map(|l| protocol.iter().find(|t| l.contains(&format!("tag: \"{t}\""))).copied())
        .collect();
    assert_eq!(tags, protocol);
}

#[test]
fn run_structured_and_mapping_file() {
    let dir = tempfile::tempdir().unwrap();
    let mapping = dir.path().join("m.txt");
    std::fs::write(&mapping, "a=SW\nb=HW\nc=HW\nd=SW\n").unwrap();
    let trace = dir.path().join("t.txt");
    let out = mixsys(&[
        "run",
        s(&core_fixture("fork_join")),
        "--mapping",
        s(&mapping),
        "--format",
        "structured",
        "--trace",
        s(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(std::fs::read_to_string(&trace).unwrap().contains("sim_time"));
    let hw = mixsys(&["run", s(&core_fixture("fork_join")), "--mapping", "all-hw-where-allowed"]);
    assert_eq!(hw.status.code(), Some(0));
    assert!(stdout(&hw).starts_with("sim_time="));
    let sw = mixsys(&["run", s(&core_fixture("fork_join"))]);
    assert_eq!(stdout(&sw), "sim_time=7.000000\n");
}

#[test]
fn run_runtime_errors() {
    let out = mixsys(&["run", s(&core_fixture("cyclic"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("StepLimitExceeded"));
    let bad = mixsys(&["run", s(&core_fixture("chain")), "--format", "xml"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn partition_security_dominant() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.txt");
    let out = mixsys(&[
        "partition",
        s(&drms()),
        "--weights",
        "1,1,1,10",
        "--refs",
        "1,1,1,1",
        "--area-budget",
        "9",
        "--report",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("content_enc=HW\n"));
    assert!(text.contains("license_enc=HW\n"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    let ids: Vec<&str> = lines[..10].iter().map(|l| l.split('=').next().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(lines[10].starts_with("objective="));
    assert!(std::fs::read_to_string(&report).unwrap().contains("evaluated"));
}

#[test]
fn partition_single_mapping_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hw_only.f4ms");
    std::fs::write(
        &file,
        r#"{
  name: "hw_only",
  components: [
    {
      id: "x", kinds: ["hw"], inputs: [], outputs: [],
      costs: {sw_time: 1, hw_time: 2, hw_area: 3, sw_energy: 1, hw_energy: 1, sw_security: 1, hw_security: 4},
      behavior: "echo",
    },
  ],
  spg: {initial: "x", finals: ["x"], connectors: []},
  ig: [],
}
"#,
    )
    .unwrap();
    let out = mixsys(&["partition", s(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    // time 2 + area 3 + energy 1 - security 4
    assert_eq!(stdout(&out), "x=HW\nobjective=2.000000\n");
    let out = mixsys(&["partition", s(&file), "--area-budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("NoFeasibleMapping"));
    let out = mixsys(&["partition", s(&file), "--method", "greedy"]);
    assert_eq!(stdout(&out), "x=HW\nobjective=2.000000\n");
    assert_eq!(mixsys(&["partition", s(&file), "--weights", "1,1"]).status.code(), Some(2));
}

#[test]
fn demo_scenarios() {
    let issue = mixsys(&["demo-drm", "--scenario", "issue"]);
    assert_eq!(issue.status.code(), Some(0));
    let text = stdout(&issue);
    assert_eq!(text.lines().filter(|l| l.starts_with("step ")).count(), 6);
    assert!(text.ends_with("result=ok\n"));
    assert_eq!(stdout(&mixsys(&["demo-drm", "--scenario", "issue"])), text);

    let expired = mixsys(&["demo-drm", "--scenario", "consume", "--now", "101"]);
    assert_eq!(expired.status.code(), Some(0));
    assert!(stdout(&expired).ends_with("result=denied:Expired\n"));
    let boundary = mixsys(&["demo-drm", "--scenario", "consume", "--now", "100"]);
    assert!(stdout(&boundary).ends_with("result=ok\n"));

    let renew = mixsys(&["demo-drm", "--scenario", "renew", "--now", "500"]);
    assert_eq!(renew.status.code(), Some(0));
    let text = stdout(&renew);
    assert!(text.contains("denied Revoked"));
    assert!(text.ends_with("result=ok\n"));

    let report = mixsys(&["demo-drm", "--scenario", "report"]);
    assert!(stdout(&report).contains("downloads: 1, consumptions: 2"));
    assert_eq!(mixsys(&["demo-drm", "--scenario", "nope"]).status.code(), Some(2));
}
