//! The `capflow` binary: outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
name = small
h = 1/32
half_width = 1
height = 1
initial = half_disk:0,0.5
tau = 2e-2
t_end = 0.1
";

fn capflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capflow")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn simulate_writes_one_metrics_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let run = dir.path().join("run");
    let out = capflow(&["simulate", &cfg, "--output", run.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# capflow metrics v1"));
    assert!(lines.next().unwrap().starts_with("k,t,volume"));
    assert_eq!(lines.count(), 5);
    assert!(run.join("config.cfg").exists());
    assert!(run.join("E_tau0.02_k0.pgm").exists());
    assert!(run.join("E_tau0.02_k5.pgm").exists());
}

#[test]
fn unknown_keys_are_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", &format!("{SMALL}colour = blue\n"));
    let out = capflow(&["simulate", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'colour'"));
}

#[test]
fn inadmissible_contact_angle_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "wet.cfg", &format!("{SMALL}beta = 1\n"));
    assert_eq!(code(&capflow(&["simulate", &cfg, "--output", dir.path().to_str().unwrap()])), 3);
}

#[test]
fn droplet_reaching_the_box_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = "h = 1/8\nhalf_width = 1\nheight = 1\ninitial = half_disk:0,0.9\ntau = 0.05\nt_end = 0.1\n";
    let cfg = write(dir.path(), "tight.cfg", text);
    assert_eq!(code(&capflow(&["simulate", &cfg, "--output", dir.path().to_str().unwrap()])), 4);
}

#[test]
fn failed_checks_exit_with_5() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tight.txt", "linf_theta = 1000\n");
    let cfg = write(dir.path(), "v.cfg", &format!("{SMALL}expected = tight.txt\nchecks = linf\n"));
    let out = capflow(&["verify", &cfg, "--output", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("v/report.csv")).unwrap();
    assert!(report.starts_with("check,status,metric,value,threshold"));
    assert!(report.contains(",fail,"));
}

#[test]
fn passing_checks_exit_with_0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", &format!("{SMALL}checks = coercivity, linf\n"));
    let out = capflow(&["verify", &cfg, "--output", dir.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_check_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.cfg", SMALL);
    let out = capflow(&["verify", &cfg, "--checks", "nonsense", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn shapes_prints_the_euclidean_constants() {
    let out = capflow(&["shapes", "--beta0", "0,-0.5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("euclidean,2,0,3.5449"), "{text}");
    assert!(rows[0].ends_with(",2.506628") || rows[0].ends_with(",2.506629"), "{text}");
}

#[test]
fn oracle_writes_curve_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let run = dir.path().join("o");
    let out = capflow(&["oracle", &cfg, "--output", run.to_str().unwrap(), "--sample-dt", "0.05"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(run.join("oracle.csv")).unwrap();
    assert!(csv.starts_with("# capflow oracle v1"));
    assert!(run.join("curve_0000.csv").exists());
}
