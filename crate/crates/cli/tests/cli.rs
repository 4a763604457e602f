use std::path::Path;
use std::process::{Command, Output};

fn q4lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_q4lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run q4lab")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn zero_weights_give_no_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let out = q4lab(&["zeros", "--kappa", "4", "--mu", "0,0,0,0"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("zeros.csv"));
    let counts: Vec<_> = rows.iter().filter(|r| r[3].ends_with(":count")).collect();
    assert_eq!(counts.len(), 3);
    assert!(counts.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0 && r[6] == "pass"));
}

#[test]
fn verify_passes_at_kappa_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = q4lab(&["verify", "--kappa", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = rows(&dir.path().join("residuals.csv"));
    assert!(!rows.is_empty());
    for r in &rows {
        let (v, t): (f64, f64) = (r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!(v <= t && r[6] == "pass", "{r:?}");
    }
}

#[test]
fn sweep_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sweep", "--kappa", "4", "--trials", "1000", "--seed", "42"];
    assert_eq!(q4lab(&args, a.path()).status.code(), Some(0));
    assert_eq!(q4lab(&args, b.path()).status.code(), Some(0));
    let x = std::fs::read(a.path().join("sweep.csv")).unwrap();
    let y = std::fs::read(b.path().join("sweep.csv")).unwrap();
    assert!(x.len() > 1000);
    assert_eq!(x, y);
    let c = tempfile::tempdir().unwrap();
    q4lab(&["sweep", "--kappa", "4", "--trials", "1000", "--seed", "43"], c.path());
    assert_ne!(x, std::fs::read(c.path().join("sweep.csv")).unwrap());
}

#[test]
fn cheb_reports_the_residue_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = q4lab(&["cheb", "--kappa", "4"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rows = rows(&dir.path().join("cheb.csv"));
    let flagged: Vec<&str> = rows.iter().filter(|r| r[6] == "flag").map(|r| r[3].as_str()).collect();
    assert_eq!(flagged, ["extended:residue_zeros", "saddle_y0:gap_to_sqrt5"]);
    let rotation = rows.iter().find(|r| r[3] == "annulus:frame_rotation").unwrap();
    assert_eq!(rotation[6], "pass");
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "kappa = 2, 9\ntrials = 3\nseed = 5\n").unwrap();
    let out = q4lab(&["sweep", "--config", cfg.to_str().unwrap(), "--kappa", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&dir.path().join("sweep.csv"));
    // 3 trials, each with four weights and three counts, at kappa 6 only
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[0].parse::<f64>().unwrap() == 6.0));
}

#[test]
fn bad_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(q4lab(&["verify", "--kappa", "0.5"], dir.path()).status.code(), Some(1));
    assert_eq!(q4lab(&["sweep", "--trials", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(q4lab(&["zeros", "--kappa", "4"], dir.path()).status.code(), Some(1));
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "tol = -1\n").unwrap();
    assert_eq!(q4lab(&["verify", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(1));
}

#[test]
fn dyn_and_coeffs_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(q4lab(&["dyn", "--kappa", "4"], dir.path()).status.code(), Some(0));
    let orbit = rows(&dir.path().join("orbit.csv"));
    assert!(orbit.iter().all(|r| r[5].parse::<f64>().unwrap().abs() < 1e-8));
    assert_eq!(q4lab(&["coeffs", "--kappa", "4"], dir.path()).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("coeffs.txt")).unwrap();
    assert!(text.contains("[k = 4]") && text.contains("a0 = w1: -512"));
}
