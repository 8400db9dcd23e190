use std::path::Path;
use std::process::{Command, Output};

fn rydpol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydpol")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const MEDIUM: &str = r#"
[medium]
linewidth_mhz = 6.07
gamma_rg_per_us = 1.2
density_per_cm3 = 2e12
dipole_c_m = 2.54e-29
wavelength_nm = 780.24
length_um = 60.0
c6_au = 2.3e23
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn repro_target_passes() {
    let o = rydpol(&["repro", "zeta"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS zeta"));
}

#[test]
fn repro_target_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &MEDIUM.replace("2e12", "3e12"));
    let o = rydpol(&["--config", &cfg, "repro", "zeta"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL zeta"));
}

#[test]
fn infeasible_medium_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &MEDIUM.replace("2e12", "2e11"));
    let o = rydpol(&["--config", &cfg, "optimize"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{MEDIUM}bogus = 1\n"));
    let o = rydpol(&["--config", &cfg, "optimize"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn missing_seed_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{MEDIUM}[noise]\nv1 = 0.66\nv2 = 1.0\nv3 = 0.75\nmean_beta1_rad = 0.0\nmean_beta2_rad = 3.141592653589793\nmean_beta3_rad = 3.141592653589793\nmonte_carlo_samples = 1000\nmonte_carlo_tasks = 2\n[fidelity]\nv_c = 0.66\nv_t = 0.75\neps_r = 0.048\neps_l = 0.025\n"));
    let o = rydpol(&["--config", &cfg, "fidelity-bound", "--monte-carlo"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = rydpol(&["--config", &cfg, "--seed", "5", "fidelity-bound", "--monte-carlo"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn visibility_curve_has_header_and_one_row_per_point() {
    let o = rydpol(&["visibility-curve", "--points", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("l_over_rb,delta_beta_b_rad,v_t\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let echo = dir.path().join("echo.toml");
    let echo = echo.to_str().unwrap();
    let a = rydpol(&["--echo-config", echo, "--seed", "9", "tomography-sim", "--shots", "3000", "--source", "fock"]);
    assert_eq!(a.status.code(), Some(0));
    let b = rydpol(&["--config", echo, "tomography-sim"]);
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rydpol"))
            .env("RYDPOL_THREADS", threads)
            .args(["tomography-sim", "--shots", "5000", "--source", "poisson", "--format", "csv"])
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run("0").status.code(), Some(2));
}

#[test]
fn truth_table_csv() {
    let o = rydpol(&["truth-table", "--kind", "cnot-b", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("input,output,probability\n"));
    assert_eq!(text.lines().count(), 17);
    let total: f64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 4.0).abs() < 1e-9);
}
