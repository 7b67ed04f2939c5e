//! End-to-end tests of the `twolevel` binary: exit codes, file output,
//! determinism and flag handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twolevel"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn twolevel")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const STROBE_CONF: &str = "command=strobe\n\
field.kind=NRzDrive\n\
field.B0=1.0\n\
field.B1=1.5\n\
field.omega=3.0\n\
strobe.periods=50\n\
strobe.q0=0.5\n\
strobe.p0=0.0\n";

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage:"));
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown command"));
}

#[test]
fn strobe_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", STROBE_CONF);
    let out = run_in(dir.path(), &["strobe", "--config", &conf]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("strobe_map.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("series_id,k,q,p,H"));
    // 50 periods -> 51 samples for the single series
    assert_eq!(lines.count(), 51);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", STROBE_CONF);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let st = run_in(dir.path(), &["strobe", "--config", &conf, "--out", out.to_str().unwrap()]);
        assert_eq!(st.status.code(), Some(0));
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn threads_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "run.conf",
        "field.kind=NRzDrive\nfield.B0=1.0\nfield.B1=1.5\nfield.omega=3.0\n\
         strobe.periods=30\nstrobe.grid_n=6\nstrobe.grid_p0=0.0\n",
    );
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let st = run_in(dir.path(), &["strobe", "--config", &conf, "--out", out_a.to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0));
    let st = run_in(
        dir.path(),
        &["strobe", "--config", &conf, "--threads", "4", "--out", out_b.to_str().unwrap()],
    );
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn override_flag_replaces_config_value() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", STROBE_CONF);
    let out = run_in(dir.path(), &["strobe", "--config", &conf, "--strobe.periods=10"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("strobe_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12); // header + 11 samples
}

#[test]
fn unknown_config_key_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", &format!("{STROBE_CONF}mystery=1\n"));
    let out = run_in(dir.path(), &["strobe", "--config", &conf]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key 'mystery'") && err.contains("line 9"), "{err}");
}

#[test]
fn duplicate_config_key_exits_2_naming_both_lines() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", &format!("{STROBE_CONF}field.B0=2.0\n"));
    let out = run_in(dir.path(), &["strobe", "--config", &conf]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("duplicate key 'field.B0'"), "{err}");
    assert!(err.contains("lines 3 and 9"), "{err}");
}

#[test]
fn missing_config_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["strobe", "--config", "does-not-exist.conf"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn degenerate_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // B0 = 0 leaves a pure z field: q is conserved and the gamma fit is
    // degenerate, which must surface as a numeric error.
    let conf = write_config(
        dir.path(),
        "run.conf",
        "field.kind=Rotating\nfield.B0=0.0\nfield.B1=1.5\nfield.omega=3.0\n\
         strobe.periods=50\nstrobe.q0=0.5\n",
    );
    let out = run_in(dir.path(), &["fit-gamma", "--config", &conf]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "run.conf", STROBE_CONF);
    let out = run_in(
        dir.path(),
        &["strobe", "--config", &conf, "--out", "/no-such-directory/strobe.csv"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_reports_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "run.conf",
        "field.kind=Rotating\nfield.B0=1.0\nfield.B1=1.5\nfield.omega=3.0\n\
         sim.q0=0.3\nsim.p0=0.0\nsim.t_end=2.0\nsim.samples=20\n",
    );
    let out = run_in(dir.path(), &["simulate", "--config", &conf]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "t,re_c_plus,im_c_plus,re_c_minus,im_c_minus,sx,sy,sz,energy");
    let mut rows = 0;
    for line in lines {
        for cell in line.split(',') {
            let x: f64 = cell.parse().unwrap();
            // serialized with enough digits to round-trip
            assert_eq!(format!("{:.16e}", x), cell);
        }
        rows += 1;
    }
    assert_eq!(rows, 20);
}

#[test]
fn not_detect_finds_fig2_event() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "run.conf",
        "field.kind=NRzDrive\nfield.B0=1.279\nfield.B1=1.5\nfield.omega=1.0\n\
         not.p0=1.5707963267948966\nnot.q0=0.0\nnot.horizon_periods=3.0\nnot.threshold=0.01\n",
    );
    let out = run_in(dir.path(), &["not-detect", "--config", &conf]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("not_events.csv")).unwrap();
    let five_pi = 5.0 * std::f64::consts::PI;
    let hit = csv.lines().skip(1).any(|l| {
        let t: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        (t - five_pi).abs() < 0.1
    });
    assert!(hit, "no event near 5π in:\n{csv}");
}
