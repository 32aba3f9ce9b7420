use std::process::Command;

fn qrenewal(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qrenewal")).args(args).output().expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn smoke_run_follows_the_damping_curve() {
    let out = qrenewal(&["run", "--config", "smoke", "--method", "laplace"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let t = column(&csv, "t");
    let pe = column(&csv, "pe_laplace");
    assert_eq!(t.len(), 51);
    for (t, p) in t.iter().zip(&pe) {
        let expected = 0.5 + 0.5 * (-1.1 * t).exp();
        assert!((p - expected).abs() < 1e-7, "t = {t}: {p} vs {expected}");
    }
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let out = qrenewal(&["run", "--config", "smoke", "--output", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
}

#[test]
fn negative_rate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/smoke.toml"))
        .unwrap()
        .replace("rates = [0.55, 0.55, 1.1]", "rates = [0.55, -0.55, 1.1]");
    std::fs::write(&path, text).unwrap();
    let out = qrenewal(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rates"));
}

#[test]
fn verify_flags_the_corrupted_channel() {
    let out = qrenewal(&["verify", "--config", "corrupted"]);
    assert_eq!(out.status.code(), Some(2));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.lines().any(|l| l.starts_with("SUMMARY FAIL")));
}

#[test]
fn verify_passes_the_smoke_scenario() {
    let out = qrenewal(&["verify", "--config", "smoke"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn unknown_method_is_an_option_error() {
    let out = qrenewal(&["run", "--config", "smoke", "--method", "euler"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--method"));
}
