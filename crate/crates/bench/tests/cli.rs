use std::path::Path;
use std::process::{Command, Output};

use jparse_bench::{decode_log, Format, RunSummary};
use jparse_core::simulator::{summarize, table1_resolvers, Scenario};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jparse-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_summary(dir: &Path, scenario: &str) -> RunSummary {
    let bytes = std::fs::read(dir.join(format!("{scenario}_summary.json"))).unwrap();
    serde_json::from_slice(&bytes).unwrap()
}

#[test]
fn two_resolvers_write_two_logs_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bench(&[
        "run", "--scenario", "2r_reach_in", "--resolver", "jparse:gamma=0.1", "--resolver", "dls:lambda=0.17", "--out", out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_summary(dir.path(), "2r_reach_in");
    assert_eq!(s.runs.len(), 2);
    assert_eq!(s.runs[0].resolver, "jparse:gamma=0.1");
    assert_eq!(s.runs[1].resolver, "dls:lambda=0.17");
    for r in &s.runs {
        assert!(dir.path().join(&r.file).is_file());
    }
    // No temp files left behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 3);
}

#[test]
fn summary_is_recomputable_from_each_log() {
    for (format, flag) in [(Format::Csv, "csv"), (Format::Json, "json")] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let o = bench(&[
            "run", "--scenario", "2r_reach_out", "--resolver", "jparse:gamma=0.06", "--resolver", "adls", "--out", out,
            "--format", flag,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for r in read_summary(dir.path(), "2r_reach_out").runs {
            let log = decode_log(&std::fs::read(dir.path().join(&r.file)).unwrap(), format).unwrap();
            assert_eq!(summarize(&log).unwrap(), r.summary, "{}", r.file);
        }
    }
}

#[test]
fn table1_sweep_runs_every_comparison_setting() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["run", "--scenario", "table1_sweep", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_summary(dir.path(), "table1_sweep");
    let expected: Vec<String> = table1_resolvers().iter().map(ToString::to_string).collect();
    let got: Vec<String> = s.runs.iter().map(|r| r.resolver.clone()).collect();
    assert_eq!(got, expected);
    assert_eq!(got.len(), 10);
}

#[test]
fn unknown_resolver_is_a_usage_error_listing_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["run", "--scenario", "2r_reach_in", "--resolver", "magic:x=1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["pinv", "dls", "adls", "edls", "jparse"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let o = bench(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("builtin scenario"));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = bench(&["run", "--scenario", "2r_reach_in", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn dumped_scenario_reproduces_the_run_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let dump = dir.path().join("scenario.json");
    let o = bench(&[
        "run", "--scenario", "line_keypoints", "--resolver", "jparse:gamma=0.1,a=3", "--seed", "9",
        "--dump-scenario", dump.to_str().unwrap(), "--out", a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dumped = Scenario::load(&dump).unwrap();
    assert_eq!(dumped.seed, 9);
    let o = bench(&["run", "--scenario", dump.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let file = "line_keypoints_jparse_gamma=0.1_a=3.csv";
    assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
}

#[test]
fn check_stability_examples() {
    let o = bench(&["check-stability", "--k", "6", "--m", "6", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("conservative bound") && text.contains("6.4516"), "{text}");
    assert!(text.lines().all(|l| !l.contains("FAIL")), "{text}");

    let o = bench(&["check-stability", "--k", "200", "--m", "3", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "k*dt = 2 passes the simple bound");

    let o = bench(&["check-stability", "--k", "250", "--m", "3", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(1));

    let o = bench(&["check-stability", "--k", "abc", "--m", "3", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gamma_examples() {
    let o = bench(&["gamma", "--v-max", "1", "--qdot-max", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("gamma >= 0.1 "), "{}", stdout(&o));

    // Planar 2R with unit links: the floor is the last link length.
    let o = bench(&["gamma", "--v-max", "0.5", "--qdot-max", "10", "--model", "planar2r"]);
    assert!(stdout(&o).contains("sigma_max floor 1 "), "{}", stdout(&o));

    let o = bench(&["gamma", "--v-max", "20", "--qdot-max", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("infeasible"));
}
