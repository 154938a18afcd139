use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trefftz_cli::experiment::RESULT_COLUMNS;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trefftz"));
    c.env_remove(trefftz_cli::OUTPUT_DIR_ENV);
    c
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn small_args(dir: &Path) -> Vec<String> {
    vec![golden("small.toml").display().to_string(), "-o".into(), dir.display().to_string()]
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, rows)
}

#[test]
fn result_csv_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = small_args(dir.path());
    let out = bin().arg("run").args(&args).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let (header, rows) = read_rows(&dir.path().join("results.csv"));
    let (g_header, g_rows) = read_rows(&golden("small_results.csv"));
    assert_eq!(header, RESULT_COLUMNS);
    assert_eq!(header, g_header);
    assert_eq!(rows.len(), g_rows.len());
    for (row, g) in rows.iter().zip(&g_rows) {
        for (k, (a, b)) in row.iter().zip(g).enumerate() {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300), "{}: {a} vs {b}", header[k]),
                _ => assert_eq!(a, b, "{}", header[k]),
            }
        }
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out = bin().arg("run").args(small_args(first.path())).args(["--set", "flux.alpha=0.3"]).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let manifest = first.path().join("manifest.toml");
    let out = run(&["run", manifest.to_str().unwrap(), "-o", second.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out));
    for f in ["results.csv", "results.tsv", "rates.csv"] {
        assert_eq!(fs::read(first.path().join(f)).unwrap(), fs::read(second.path().join(f)).unwrap(), "{f}");
    }
    let m = fs::read_to_string(&manifest).unwrap();
    assert!(m.contains("alpha = 0.3") && m.contains("trefftz_core"));
}

#[test]
fn validate_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "[flux]\nalpha = -1.0\n\n[source]\nkind = \"polynomial\"\ncoeffs = [1.0]\n\n\
         [materials]\nbreakpoints = [30.5]\neps = [1.0, 2.0]\nmu = [1.0, 1.0]\n",
    )
    .unwrap();
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let t = text(&out);
    assert!(t.contains("flux.alpha must be positive"), "{t}");
    assert!(t.contains("homogeneous"), "{t}");
    assert!(t.contains("slab 0"), "{t}");

    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));

    // run refuses the same file with the same exit code
    let out = run(&["run", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn parse_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "[flux]\nalpha = 0.5\nbeta = \"x\"\n").unwrap();
    let out = run(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("line 3"), "{}", text(&out));
    let out = run(&["run", "--set", "flux.alpha"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .args(small_args(dir.path()))
        .args(["--set", "quadrature.face=1", "--set", "experiment.kind=\"run\""])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
    assert!(text(&out).contains("quadrature"), "{}", text(&out));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let out = bin()
        .args(["run", golden("small.toml").to_str().unwrap(), "--set", "experiment.kind=run"])
        .env(trefftz_cli::OUTPUT_DIR_ENV, &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    assert!(env_dir.join("results.csv").exists());
    assert!(env_dir.join("manifest.toml").exists());
}

#[test]
fn flux_sweep_has_a_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("sweep-flux").args(small_args(dir.path())).args(["--set", "basis.degree=1"]).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let (_, rows) = read_rows(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 121);
    assert_eq!((&rows[0][5][..], &rows[0][6][..]), ("0.0", "0.0"));
    assert_eq!((&rows[1][5][..], &rows[1][6][..]), ("0.0", "0.1"));
    assert_eq!((&rows[120][5][..], &rows[120][6][..]), ("1.0", "1.0"));
}

#[test]
fn spectrum_writes_eigenvalues_per_degree() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("spectrum")
        .args(small_args(dir.path()))
        .args(["--set", "experiment.degrees=[0, 1, 2]", "--set", "output.svg=true"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let (header, rows) = read_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["p", "index", "re", "im", "modulus"]);
    // 10 cells, 2p + 2 functions each
    assert_eq!(rows.len(), 10 * (2 + 4 + 6));
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() <= 1.0 + 1e-10));
    let (_, summary) = read_rows(&dir.path().join("spectrum_summary.csv"));
    assert_eq!(summary.len(), 3);
    assert!(dir.path().join("plot.svg").exists());
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn energy_audit_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("energy").args(small_args(dir.path())).output().unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let (_, history) = read_rows(&dir.path().join("energy.csv"));
    assert_eq!(history.len(), 6);
    let e: Vec<f64> = history.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let (header, audit) = read_rows(&dir.path().join("energy_audit.csv"));
    assert_eq!(header.last().unwrap(), "residual");
    assert!(audit[0][6].parse::<f64>().unwrap() <= 1e-9);
}

#[test]
fn sweeps_report_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("sweep-h")
        .args(small_args(dir.path()))
        .args([
            "--set",
            "experiment.h_values=[2.0, 1.0, 0.5]",
            "--set",
            "experiment.degrees=[1, 2]",
            "--set",
            "output.svg=true",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", text(&out));
    let (_, rows) = read_rows(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| !r[10].is_empty()));
    let (header, fits) = read_rows(&dir.path().join("rates.csv"));
    assert_eq!(header[0], "p");
    assert_eq!(fits.len(), 2);
    let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.contains("p = 1") && svg.contains("p = 2"));
}
