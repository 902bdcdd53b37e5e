use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn impes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impes"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn fivespot(out: &Path) -> Output {
    impes(&["fivespot", "--n", "8", "--workers", "1", "--out", out.to_str().unwrap()])
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(impes(&["convergence", "--meshes", "8,12"]).status.code(), Some(2));
    assert_eq!(impes(&["fivespot", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(impes(&[]).status.code(), Some(2));
}

#[test]
fn convergence_writes_table_and_exit_code_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = impes(&["convergence", "--case", "ex2", "--meshes", "4,8", "--check", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let csv = fs::read_to_string(dir.path().join("errors_ex2.csv")).unwrap();
    assert!(csv.starts_with("n,err_S_L2,ord,err_p_L2,ord,err_u_L2,ord,err_S_H1,ord,err_p_H1,ord\n"));
    assert_eq!(csv.lines().count(), 4);
    assert!(stdout.contains("PASS") || stdout.contains("FAIL"));
    let expected = if stdout.lines().any(|l| l.starts_with("FAIL")) { 1 } else { 0 };
    assert_eq!(out.status.code(), Some(expected), "{stdout}");
}

#[test]
fn first_case_passes_its_checks_on_three_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = impes(&["convergence", "--case", "ex1", "--meshes", "8,16,32", "--check", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS finest-pair order err_p_L2"));
}

#[test]
fn fivespot_without_injection_stays_put() {
    use immersed_impes::cli::{run_fivespot, FiveSpotCase};
    let case = FiveSpotCase::new(8, 0.0, 0.0).unwrap();
    let dt = FiveSpotCase::default_dt_days(8);
    let config = case.simulation_config(dt, 20.0 * dt, 1e-10, false).unwrap();
    let initial = config.initial.values.clone();
    let mut last = Vec::new();
    let summary = run_fivespot(&case, &config, &[20], 0, &mut |_, sim| {
        last = sim.state().saturation.values.clone();
        Ok(())
    })
    .unwrap();
    assert_eq!(summary.steps, 20);
    assert_eq!(summary.net_injected, 0.0);
    for (a, b) in initial.iter().zip(&last) {
        assert!((a - b).abs() < 1e-12, "{a} -> {b}");
    }
}

#[test]
fn fivespot_outputs_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (fivespot(a.path()), fivespot(b.path()));
    assert_eq!(ra.status.code(), Some(0), "{}", String::from_utf8_lossy(&ra.stdout));
    assert_eq!(rb.status.code(), Some(0));
    for name in ["sat_0.vtk", "sat_120.vtk", "sat_240.vtk", "sat_375.vtk", "fields_120.csv", "fields_375.csv"] {
        let (x, y) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        assert!(!x.is_empty(), "{name}");
        assert_eq!(x, y, "{name} differs between runs");
    }
    let vtk = fs::read_to_string(a.path().join("sat_375.vtk")).unwrap();
    assert!(vtk.contains("DATASET STRUCTURED_POINTS\nDIMENSIONS 9 9 1\n"));
    assert!(vtk.contains("POINT_DATA 81\nSCALARS S float 1\n"));
    let csv = fs::read_to_string(a.path().join("fields_375.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,S,p,ux,uy"));
    assert_eq!(csv.lines().count(), 1 + 64);
}
