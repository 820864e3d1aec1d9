use std::path::Path;
use std::process::{Command, Output};

fn symop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

struct Row {
    delta_tau: f64,
    delta_omega: f64,
    gamma_sq: f64,
    p_coinc: f64,
}

fn read_rows(path: &Path) -> Vec<Row> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        reader.headers().unwrap(),
        vec!["delta_tau", "delta_omega", "gamma_sq", "p_coinc"]
    );
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            Row {
                delta_tau: f(0),
                delta_omega: f(1),
                gamma_sq: f(2),
                p_coinc: f(3),
            }
        })
        .collect()
}

#[test]
fn overlap_of_identical_packets() {
    let out = symop(&["overlap", "--sigma1", "0.7", "--sigma2", "0.7", "--tau1", "-1.5", "--tau2", "-1.5", "--omega1", "2", "--omega2", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1.000000000000+0.000000000000i\n");
}

#[test]
fn overlap_quadrature_agrees_with_closed_form() {
    for args in [
        ["--sigma1", "1", "--sigma2", "1.5", "--tau1", "0.3", "--tau2", "-0.4", "--omega1", "1", "--omega2", "2.5"],
        ["--sigma1", "0.4", "--sigma2", "2.2", "--tau1", "-2", "--tau2", "1", "--omega1", "-3", "--omega2", "0.5"],
    ] {
        let mut full = vec!["overlap", "--quadrature"];
        full.extend(args);
        let out = symop(&full);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let text = stdout(&out);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3, "{text}");
        assert!(lines[1].starts_with("quadrature "));
        let diff: f64 = lines[2].strip_prefix("difference ").unwrap().parse().unwrap();
        assert!(diff < 1e-8, "{diff}");
    }
}

#[test]
fn nonpositive_sigma_is_a_usage_error_naming_the_flag() {
    for (flag, value) in [("--sigma1", "0"), ("--sigma2", "-1")] {
        let out = symop(&["overlap", flag, value]);
        assert_eq!(out.status.code(), Some(2));
        assert!(stderr(&out).contains(flag), "{}", stderr(&out));
    }
    let out = symop(&["hom-sweep", "--sigma1", "-0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--sigma1"));
}

#[test]
fn malformed_flags_are_usage_errors() {
    for args in [
        vec!["hom-sweep", "--dtau-range", "1:2:1"],
        vec!["hom-sweep", "--domega-range", "0:1"],
        vec!["hom-sweep", "--pol1", "Q"],
        vec!["overlap", "--bogus"],
        vec!["selfcheck", "--cases", "-3"],
    ] {
        assert_eq!(symop(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dip.csv");
    let out = symop(&[
        "hom-sweep", "--sigma1", "1", "--sigma2", "1.4", "--omega0", "2",
        "--dtau-range", "-3:3:7", "--domega-range", "-2:2:5", "--pol1", "H", "--pol2", "D",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = read_rows(&path);
    assert_eq!(rows.len(), 35);
    // Δτ outer, Δω inner
    assert_eq!((rows[0].delta_tau, rows[0].delta_omega), (-3.0, -2.0));
    assert_eq!((rows[1].delta_tau, rows[1].delta_omega), (-3.0, -1.0));
    assert_eq!((rows[5].delta_tau, rows[5].delta_omega), (-2.0, -2.0));
    for r in &rows {
        assert!((r.p_coinc - 0.5 * (1.0 - r.gamma_sq)).abs() < 1e-12);
        assert!(r.gamma_sq <= 0.5 + 1e-12, "D against H caps |γ|² at 1/2");
    }
}

#[test]
fn matched_photons_bunch_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("origin.csv");
    let out = symop(&["hom-sweep", "--dtau-range", "-1:1:3", "--domega-range", "-1:1:3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_rows(&path);
    let origin = rows.iter().find(|r| r.delta_tau == 0.0 && r.delta_omega == 0.0).unwrap();
    assert!((origin.gamma_sq - 1.0).abs() < 1e-12);
    assert!(origin.p_coinc.abs() < 1e-12);
}

#[test]
fn orthogonal_polarizations_never_interfere() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hv.csv");
    let out = symop(&["hom-sweep", "--pol1", "H", "--pol2", "V", "--dtau-range", "-2:2:5", "--domega-range", "-1:1:3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for r in read_rows(&path) {
        assert!((r.p_coinc - 0.5).abs() < 1e-12);
    }
}

#[test]
fn default_grid_matches_the_analytic_dip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("full.csv");
    let out = symop(&["hom-sweep", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_rows(&path);
    assert_eq!(rows.len(), 41 * 41);
    for r in rows {
        // σ₁ = σ₂ = 1: |γ|² = exp(−Δτ²/4 − Δω²)
        let g = (-r.delta_tau.powi(2) / 4.0 - r.delta_omega.powi(2)).exp();
        assert!((r.p_coinc - 0.5 * (1.0 - g)).abs() < 1e-10);
    }
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_schedules() {
    let args = ["hom-sweep", "--sigma2", "0.8", "--dtau-range", "-2:2:9", "--domega-range", "-1:3:5", "--pol2", "R"];
    let a = symop(&args);
    let b = symop(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = symop(&seq);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("dip.csv");
    let out = symop(&["hom-sweep", "--dtau-range", "0:0:1", "--domega-range", "0:0:1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("dip.csv"));
}

#[test]
fn selfcheck_passes_and_is_deterministic() {
    let a = symop(&["selfcheck", "--seed", "7", "--cases", "20"]);
    let b = symop(&["selfcheck", "--seed", "7", "--cases", "20"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("permanent-identity"));
    assert!(text.contains("fock-expectation"));
    assert!(text.lines().all(|l| l.ends_with(" ok")), "{text}");
}

#[test]
fn selfcheck_with_no_cases_is_empty() {
    let out = symop(&["selfcheck", "--cases", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}
