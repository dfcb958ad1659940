use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn zmoment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zmoment"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn body_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn moment_single_row_has_eight_columns() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("m");
    let o = zmoment(&["moment", "--grid", "1000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out.join("moment.csv"));
    let body = body_lines(&csv);
    assert_eq!(body.len(), 2);
    assert_eq!(
        body[0],
        "T,discrete,continuous,main1,main2,envelope,residual_discrete,residual_continuous"
    );
    assert_eq!(body[1].split(',').count(), 8);
    assert!(csv.starts_with("# config_hash: "));
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("# calibration_version: 1"));
    let js: serde_json::Value = serde_json::from_str(&read(&out.join("moment.json"))).unwrap();
    assert_eq!(js["records"]["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn cf_records_are_certified_with_string_quotients() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("cf");
    let o = zmoment(&["cf", "--k", "1..4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let js: serde_json::Value = serde_json::from_str(&read(&out.join("cf.json"))).unwrap();
    let records = js["records"].as_array().unwrap();
    assert_eq!(records.len(), 4);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["k"], i as i64 + 1);
        assert!(r["certified_upto"].as_u64().unwrap() >= 20);
        assert!(r["quotients"][0].is_string());
    }
    assert_eq!(records[0]["quotients"][0], "23");
    assert_eq!(records[0]["quotients"][6], "591");
}

#[test]
fn invalid_theta_writes_nothing() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("never");
    let o = zmoment(&["saddle", "--theta", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn grid_over_cap_is_rejected_by_name() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("never");
    let o = zmoment(&["moment", "--grid", "50000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
    assert!(!out.exists());
}

#[test]
fn module_and_io_errors_have_distinct_codes() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("p");
    let o = zmoment(&[
        "afe",
        "--grid",
        "100",
        "--precision",
        "15",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "precision");

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = zmoment(&["afe", "--grid", "100", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let dir = tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("t{threads}"));
        for cmd in [
            &["moment", "--grid", "300,700", "--mode", "afe"][..],
            &["saddle", "--grid", "800"][..],
        ] {
            let mut args = cmd.to_vec();
            args.extend(["--threads", threads, "--out", out.to_str().unwrap()]);
            let o = zmoment(&args);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        outputs.push(out);
    }
    for name in ["moment.csv", "moment.json", "saddle.csv", "saddle.json"] {
        assert_eq!(
            read(&outputs[0].join(name)),
            read(&outputs[1].join(name)),
            "{name}"
        );
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# moments\ngrid = 100, 200\nmode = afe\ncontinuous = false\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = zmoment(&[
        "moment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&a.join("moment.csv"));
    assert_eq!(body_lines(&csv).len(), 3);
    assert!(csv.contains("# mode: afe"));
    // continuous column is empty when disabled
    assert!(body_lines(&csv)[1].split(',').nth(2).unwrap().is_empty());

    let o = zmoment(&[
        "moment",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "150",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv_b = read(&b.join("moment.csv"));
    assert_eq!(body_lines(&csv_b).len(), 2);
    assert!(body_lines(&csv_b)[1].starts_with("150,"));
    assert_ne!(csv.lines().next(), csv_b.lines().next());

    std::fs::write(&cfg, "grid = 100\nbogus = 1\n").unwrap();
    let o = zmoment(&[
        "moment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn golden_report_regression() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("first");
    let args = ["report", "--grid", "100,200", "--out"];
    let mut a = args.to_vec();
    a.push(first.to_str().unwrap());
    let o = zmoment(&a);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = first.join("report.csv");
    assert!(first.join("report_saddle.csv").exists());
    assert!(first.join("report.json").exists());

    let second = dir.path().join("second");
    let mut b = args.to_vec();
    b.extend([
        second.to_str().unwrap(),
        "--golden",
        golden.to_str().unwrap(),
    ]);
    assert!(zmoment(&b).status.success());

    let tampered = dir.path().join("tampered.csv");
    std::fs::write(&tampered, read(&golden).replace("100,", "101,")).unwrap();
    let mut c = args.to_vec();
    c.extend([
        second.to_str().unwrap(),
        "--golden",
        tampered.to_str().unwrap(),
    ]);
    let o = zmoment(&c);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn calibration_override() {
    let dir = tempdir().unwrap();
    let cal = dir.path().join("cal.toml");
    let shipped = include_str!("../../core/calibration/calibration.toml");
    std::fs::write(
        &cal,
        shipped.replace("version = \"1\"", "version = \"test-7\""),
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = zmoment(&[
        "afe",
        "--grid",
        "100",
        "--calibration",
        cal.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&out.join("afe.csv")).contains("# calibration_version: test-7"));

    std::fs::write(&cal, "version = \"broken\"\n").unwrap();
    let o = zmoment(&[
        "afe",
        "--calibration",
        cal.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
