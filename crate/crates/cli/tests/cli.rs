use std::process::{Command, Output};

use toeplitz_fh::fh_symbols::{fourier_of_symbol, SymbolSpec};
use toeplitz_fh::spectra::dense_eig_oracle;
use toeplitz_fh::toeplitz_core::build_toeplitz;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toeplitz-fh"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eig_matches_dense_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eig.csv");
    let out = run(&["eig", "--alpha", "0.25", "--c1", "one", "--N", "32", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert_eq!(stderr(&out).lines().count(), 1);

    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,N,lambda_min,scaled,iterations,residual");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[1], "32");
    let lambda: f64 = fields[2].parse().unwrap();

    let spec = SymbolSpec::one(0.25).unwrap();
    let sys = build_toeplitz(&fourier_of_symbol(&spec, 32).unwrap(), 32).unwrap();
    let oracle = dense_eig_oracle(&sys.dense()).unwrap()[0];
    assert!((lambda - oracle).abs() < 1e-8, "{lambda} vs {oracle}");
}

#[test]
fn verify_writes_csv_with_lf_endings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = run(&["verify", "principal", "--alpha", "0.3", "--c1", "one", "--N", "256,512,1024,2048", "--M", "800", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("principal: pass"), "{}", stderr(&out));

    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(!csv.contains('\r'));
    assert!(csv.ends_with('\n'));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "theorem,alpha,N,measured,predicted,residual,verdict,group,x,y,k");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 11 && r[0] == "principal" && r[6] == "pass"));
    let principal: Vec<&Vec<&str>> = rows.iter().filter(|r| r[7] == "principal").collect();
    assert_eq!(principal.len(), 4);
    for r in &rows {
        let residual: f64 = r[5].parse().unwrap();
        assert!(residual >= 0.0);
        // 17 significant digits in scientific notation
        assert_eq!(r[3].split('e').next().unwrap().trim_start_matches('-').len(), 18, "{}", r[3]);
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..2).map(|i| dir.path().join(format!("w{i}.csv"))).collect();
    for (i, f) in files.iter().enumerate() {
        let out = bin()
            .args(["verify", "widom", "--N", "8,33,64", "--seed", "17", "-o", f.to_str().unwrap()])
            .env("TOEPLITZ_FH_THREADS", if i == 0 { "1" } else { "2" })
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
}

#[test]
fn coeffs_to_stdout() {
    let out = run(&["coeffs", "--alpha", "0", "--c1", "one", "--half-width", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[5], "0,1.0000000000000000e0,0.0000000000000000e0");
    assert_eq!(lines[1], "-4,0.0000000000000000e0,0.0000000000000000e0");
}

#[test]
fn exit_statuses() {
    // usage errors
    assert_eq!(run(&["verify", "prod", "--alpha", "0.2,0.25", "--N", "64,128"]).status.code(), Some(2));
    assert_eq!(run(&["eig", "--alpha", "0.3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let missing = run(&["coeffs", "--alpha", "0.3", "--half-width", "4", "-o", "/nonexistent/dir/x.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    let threads = bin().args(["coeffs", "--alpha", "0.3", "--half-width", "4"]).env("TOEPLITZ_FH_THREADS", "zero").output().unwrap();
    assert_eq!(threads.status.code(), Some(2));

    // fail verdict
    let fail = run(&["verify", "morphos", "--alpha", "0.25", "--N", "64,128,256", "--threshold", "morphos_band=1.0"]);
    assert_eq!(fail.status.code(), Some(1), "{}", stderr(&fail));
    assert!(stderr(&fail).starts_with("morphos: fail"));

    // a non-positive c1 is rejected before any computation
    assert_eq!(run(&["eig", "--alpha", "0", "--c1", "1,1,1", "--N", "8"]).status.code(), Some(2));

    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_runs_each_alpha() {
    let out = run(&["sweep", "rappel", "--alpha", "0.2,0.3", "--N", "64,128"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let alphas: std::collections::BTreeSet<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(alphas.len(), 2);
    assert!(stderr(&out).contains("2 pass"));
}

#[test]
fn kernel_norm_reports_both_columns() {
    let out = run(&["kernel-norm", "--alpha", "0.3", "--M", "200", "--diagonal", "zero"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let f: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let (norm, inv): (f64, f64) = (f[3].parse().unwrap(), f[4].parse().unwrap());
    assert!((norm * inv - 1.0).abs() < 1e-15);
}
