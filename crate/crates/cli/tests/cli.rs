//! Black-box tests of the `latdiff` binary: exit codes, config-file
//! merging, output formats, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn latdiff(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latdiff"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("the latdiff binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("the process exits normally")
}

/// First non-comment line of a rendered table, i.e. the CSV header.
fn header_of(text: &str) -> &str {
    text.lines()
        .find(|line| !line.starts_with('#'))
        .expect("the table has a header")
}

#[test]
fn version_flag_prints_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(dir.path(), &["--version"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("latdiff"));
}

#[test]
fn unknown_suite_name_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(dir.path(), &["validate", "no-such-suite"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("no-such-suite"), "stderr names the bad suite: {err}");
    assert!(err.contains("diffusion-length"), "stderr lists the known suites: {err}");
}

#[test]
fn quick_validation_passes_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = latdiff(
        dir.path(),
        &[
            "validate",
            "--quick",
            "--jobs",
            "1",
            "--report",
            report.to_str().unwrap(),
            "closed-system",
            "coherence-law",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"), "stdout lists passing checks: {text}");
    assert!(!text.contains("FAIL"), "no failing checks expected: {text}");

    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap())
        .expect("the report is valid JSON");
    let records = parsed.as_array().expect("the report is an array");
    assert!(!records.is_empty());
    for record in records {
        assert!(record["passed"].as_bool().unwrap(), "failing record: {record}");
        assert!(record["case_id"].is_string());
        let suite = record["suite"].as_str().unwrap();
        assert!(suite == "closed-system" || suite == "coherence-law");
    }
}

#[test]
fn propagate_emits_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(
        dir.path(),
        &["propagate", "--state", "delta", "--t-end", "1", "--out", "series.csv"],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(text.starts_with("# units:"), "the units comment leads the file");
    assert_eq!(
        header_of(&text),
        "t,mean_n,variance,d_flux,d_fd,\
         re_rho_1,im_rho_1,re_rho_2,im_rho_2,re_rho_3,im_rho_3,re_rho_4,im_rho_4,\
         boundary_mass"
    );
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(rows.len() >= 2, "the series has rows");
    let first: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    let last: f64 = rows[rows.len() - 1].split(',').next().unwrap().parse().unwrap();
    assert_eq!(first, 0.0);
    assert!((last - 1.0).abs() < 1e-12, "the series ends at t_end, got {last}");
}

#[test]
fn propagate_without_an_output_path_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(dir.path(), &["propagate", "--t-end", "0.5"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).starts_with("# units:"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{ "gamma": 0.7, "t-end": 2.0, "state": "gaussian", "width": 4.0 }"#)
        .unwrap();
    let out = latdiff(
        dir.path(),
        &[
            "propagate",
            "--config",
            cfg.to_str().unwrap(),
            "--gamma",
            "0",
            "--scheme",
            "bloch-closed",
            "--t-end",
            "1",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("Gamma = 0, scheme bloch-closed"),
        "the flag wins over the file: {text}"
    );
    assert!(text.contains("state gaussian w=4"), "file settings still apply: {text}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{ "t-end": 1.0, "bogus": 3 }"#).unwrap();
    let out = latdiff(dir.path(), &["propagate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bogus"), "stderr names the key: {}", stderr(&out));
}

#[test]
fn snapshot_times_require_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(dir.path(), &["propagate", "--t-end", "1", "--snapshot-times", "0.5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("snapshot-out"), "stderr: {}", stderr(&out));
}

#[test]
fn snapshots_land_in_their_own_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(
        dir.path(),
        &[
            "propagate",
            "--state",
            "gaussian",
            "--width",
            "3",
            "--t-end",
            "1",
            "--out",
            "series.csv",
            "--snapshot-times",
            "0,1",
            "--snapshot-out",
            "pops.csv",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("pops.csv")).unwrap();
    let header = header_of(&text);
    assert!(header.starts_with("n,"), "site column first: {header}");
    assert_eq!(header.matches("pop_t").count(), 2, "one column per requested time");
}

#[test]
fn width_flags_are_validated_per_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(dir.path(), &["propagate", "--state", "delta", "--width", "3"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--width"), "stderr: {}", stderr(&out));

    let out = latdiff(dir.path(), &["propagate", "--state", "gaussian"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("--width"), "stderr: {}", stderr(&out));
}

#[test]
fn figure_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["one", "two"] {
        let out = latdiff(
            dir.path(),
            &["figure", "fig1a", "--points", "40", "--out-dir", sub],
        );
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    let a = fs::read(dir.path().join("one/fig1a.csv")).unwrap();
    let b = fs::read(dir.path().join("two/fig1a.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeated panel runs are byte-identical");
}

#[test]
fn sweep_parallelism_does_not_change_the_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--target",
        "l2",
        "--state",
        "standing",
        "--w",
        "1,2,3",
        "--k",
        "0,0.3",
        "--gamma",
        "0.5,1",
        "--tau",
        "2,5",
    ];
    for (jobs, name) in [("1", "a.csv"), ("4", "b.csv")] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend_from_slice(&["--jobs", jobs, "--out", name]);
        let out = latdiff(dir.path(), &full);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b, "worker count never reorders rows");

    let text = String::from_utf8(a).unwrap();
    assert_eq!(header_of(&text), "w,k,p,gamma,tau,value");
    let rows = text.lines().filter(|l| !l.starts_with('#')).skip(1).count();
    assert_eq!(rows, 3 * 2 * 2 * 2, "one row per grid point");
}

#[test]
fn difflength_reports_the_closed_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let out = latdiff(
        dir.path(),
        &[
            "difflength",
            "--state",
            "gaussian",
            "--width",
            "10",
            "--gamma",
            "1",
            "--tau",
            "5",
            "--json",
            "summary.json",
        ],
    );
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("l2_closed"));

    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let lifetime = latdiff_core::Lifetime::new(5.0).unwrap();
    let want = latdiff_core::difflength::l2_closed_gaussian(1.0, 10.0, 1.0, &lifetime);
    assert!((parsed["l2_closed"].as_f64().unwrap() - want).abs() < 1e-12 * want);
    let gm = latdiff_core::difflength::gamma_max(10.0, &lifetime).unwrap().unwrap();
    assert!((parsed["gamma_max"].as_f64().unwrap() - gm).abs() < 1e-15);
    assert!(parsed["l2_numeric"].is_null(), "no numeric run was requested");
}
