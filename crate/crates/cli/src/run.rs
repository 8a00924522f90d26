//! Executes a [`RunConfig`] and renders the CSV output.

use std::fmt::Write as _;
use std::io::Write as _;

use rayon::prelude::*;
use toeplitz_fh::experiments::{
    verify_bounds, verify_half_lemma, verify_inverse1, verify_inverse2, verify_morphos, verify_noyau, verify_predictor,
    verify_principal, verify_prod, verify_rappel, verify_widom, DriverOptions, SampleGrid, TheoremId, Verdict,
    VerificationReport,
};
use toeplitz_fh::fh_symbols::{fourier_of_inverse_symbol, fourier_of_symbol};
use toeplitz_fh::kernels::{nystrom_g_with, operator_norm_nystrom, DiagonalRule};
use toeplitz_fh::spectra::{lambda_min_toeplitz, PowerOptions};
use toeplitz_fh::toeplitz_core::build_toeplitz;

use crate::config::{CommandKind, Diagonal, RunConfig};

pub const VERIFY_HEADER: &str = "theorem,alpha,N,measured,predicted,residual,verdict,group,x,y,k";

#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<toeplitz_fh::Error> for RunError {
    fn from(e: toeplitz_fh::Error) -> Self {
        use toeplitz_fh::Error::*;
        match e {
            Breakdown { .. } | NoConvergence { .. } => RunError::Numerical(e.to_string()),
            _ => RunError::Usage(e.to_string()),
        }
    }
}

/// Result of a run: the CSV text, the summary line for stderr and the exit
/// status.
#[derive(Debug)]
pub struct Outcome {
    pub csv: String,
    pub summary: String,
    pub status: i32,
}

/// 17 significant digits; round-trips every `f64`. Zeros print unsigned.
pub fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn execute(config: &RunConfig) -> Result<Outcome, RunError> {
    match config.command {
        CommandKind::Coeffs => coeffs(config),
        CommandKind::Eig => eig(config),
        CommandKind::KernelNorm => kernel_norm(config),
        CommandKind::Verify | CommandKind::Sweep => verify(config),
    }
}

/// Writes the CSV to the configured path (or stdout) in one go.
pub fn emit(config: &RunConfig, outcome: &Outcome) -> Result<(), RunError> {
    match &config.output {
        Some(path) => std::fs::write(path, &outcome.csv)
            .map_err(|e| RunError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(outcome.csv.as_bytes())
            .map_err(|e| RunError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

/// Fails early when the output directory does not exist.
pub fn check_output(config: &RunConfig) -> Result<(), RunError> {
    if let Some(path) = &config.output {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = parent {
            if !dir.is_dir() {
                return Err(RunError::Usage(format!("output directory {} does not exist", dir.display())));
            }
        }
        if path.is_dir() {
            return Err(RunError::Usage(format!("output path {} is a directory", path.display())));
        }
    }
    Ok(())
}

fn power(config: &RunConfig) -> PowerOptions {
    PowerOptions { seed: config.seed, ..PowerOptions::default() }
}

fn coeffs(config: &RunConfig) -> Result<Outcome, RunError> {
    let spec = config.c1_or_default().spec(config.alphas[0])?;
    let m = config.half_width.expect("validated");
    let table = if config.inverse { fourier_of_inverse_symbol(&spec, m)? } else { fourier_of_symbol(&spec, m)? };
    let mut csv = String::from("n,re,im\n");
    for n in -(m as i64)..=m as i64 {
        let z = table.get(n);
        writeln!(csv, "{n},{},{}", fmt_float(z.re), fmt_float(z.im)).unwrap();
    }
    let summary = format!("coeffs: {} coefficients, alpha={}, c1={}", 2 * m + 1, spec.alpha(), config.c1_or_default());
    Ok(Outcome { csv, summary, status: 0 })
}

fn eig(config: &RunConfig) -> Result<Outcome, RunError> {
    let alpha = config.alphas[0];
    let spec = config.c1_or_default().spec(alpha)?;
    let nmax = *config.ns.last().expect("validated");
    let full = build_toeplitz(&fourier_of_symbol(&spec, nmax)?, nmax)?;
    let opts = power(config);
    let c1 = spec.c1_at_one();
    let estimates = config
        .ns
        .par_iter()
        .map(|&n| lambda_min_toeplitz(&full.truncate(n), &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("alpha,N,lambda_min,scaled,iterations,residual\n");
    for (&n, e) in config.ns.iter().zip(&estimates) {
        let scaled = e.value * (n as f64).powf(2.0 * alpha) / c1;
        writeln!(
            csv,
            "{},{n},{},{},{},{}",
            fmt_float(alpha),
            fmt_float(e.value),
            fmt_float(scaled),
            e.iterations,
            fmt_float(e.residual)
        )
        .unwrap();
    }
    let last = estimates.last().expect("non-empty");
    let summary = format!("eig: lambda_min(T_{nmax}) = {:.10e}, alpha={alpha}", last.value);
    Ok(Outcome { csv, summary, status: 0 })
}

fn kernel_norm(config: &RunConfig) -> Result<Outcome, RunError> {
    let m = config.m.expect("validated");
    let diagonal = config.diagonal.unwrap_or(Diagonal::Corrected);
    let rule = match diagonal {
        Diagonal::Zero => DiagonalRule::Zero,
        Diagonal::Corrected => DiagonalRule::Corrected,
    };
    let opts = power(config);
    let norms = config
        .alphas
        .par_iter()
        .map(|&a| nystrom_g_with(a, m, 1.0, rule).and_then(|k| operator_norm_nystrom(&k, &opts)))
        .collect::<Result<Vec<_>, _>>()?;
    let label = match diagonal {
        Diagonal::Zero => "zero",
        Diagonal::Corrected => "corrected",
    };
    let mut csv = String::from("alpha,M,diagonal,norm,inverse_norm\n");
    for (&a, &v) in config.alphas.iter().zip(&norms) {
        writeln!(csv, "{},{m},{label},{},{}", fmt_float(a), fmt_float(v), fmt_float(1.0 / v)).unwrap();
    }
    let summary = format!("kernel-norm: {} value(s) at M={m}, diagonal={label}", norms.len());
    Ok(Outcome { csv, summary, status: 0 })
}

fn run_check(config: &RunConfig, theorem: TheoremId, alphas: &[f64]) -> Result<VerificationReport, RunError> {
    let opts = DriverOptions { power: power(config), thresholds: config.thresholds() };
    let c1 = config.c1_or_default();
    let ns = &config.ns;
    let m = config.m.unwrap_or(1000);
    let grid = if config.points.is_empty() { SampleGrid::default() } else { SampleGrid::product(&config.points) };
    let report = match theorem {
        TheoremId::Principal => verify_principal(&c1.spec(alphas[0])?, ns, m, &opts)?,
        TheoremId::Prod => verify_prod(&c1.spec(alphas[0])?, &c1.spec(alphas[1])?, ns, m, &opts)?,
        TheoremId::Noyau => verify_noyau(&c1.spec(alphas[0])?, ns, &grid, &opts)?,
        TheoremId::Inverse1 => verify_inverse1(&c1.spec(alphas[0])?, ns, &grid, &opts)?,
        TheoremId::Inverse2 => verify_inverse2(&c1.spec(alphas[0])?, ns[0], config.delta.unwrap_or(0.05), &opts)?,
        TheoremId::Predictor => verify_predictor(&c1.spec(alphas[0])?, ns, &opts)?,
        TheoremId::Rappel => verify_rappel(&c1.spec(alphas[0])?, ns, &opts)?,
        TheoremId::Morphos => verify_morphos(&c1.spec(alphas[0])?, ns, &opts)?,
        TheoremId::HalfLemma => verify_half_lemma(&c1.spec(0.25)?, alphas, ns, &opts)?,
        TheoremId::Widom => verify_widom(ns, config.seed, &opts)?,
        TheoremId::Bounds => verify_bounds(alphas, m, &opts)?,
    };
    Ok(report)
}

pub fn report_rows(report: &VerificationReport, out: &mut String) {
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            report.theorem,
            fmt_float(r.alpha),
            r.n,
            fmt_float(r.measured),
            fmt_float(r.predicted),
            fmt_float(r.residual),
            report.verdict,
            r.group,
            fmt_opt(r.x),
            fmt_opt(r.y),
            r.k.map(|k| k.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
}

fn verify(config: &RunConfig) -> Result<Outcome, RunError> {
    let theorem = config.theorem.expect("validated");
    let reports: Vec<VerificationReport> = if config.command == CommandKind::Sweep {
        config.alphas.iter().map(|&a| run_check(config, theorem, &[a])).collect::<Result<_, _>>()?
    } else {
        vec![run_check(config, theorem, &config.alphas)?]
    };
    let mut csv = format!("{VERIFY_HEADER}\n");
    for r in &reports {
        report_rows(r, &mut csv);
    }
    let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let summary = if let [only] = reports.as_slice() {
        format!("{theorem}: {} ({}) [{}]", only.verdict, only.criterion, only.params)
    } else {
        let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
        format!(
            "{theorem} sweep over {} alphas: {} pass, {failed} fail, {} inconclusive",
            reports.len(),
            count(Verdict::Pass),
            count(Verdict::Inconclusive)
        )
    };
    Ok(Outcome { csv, summary, status: if failed > 0 { 1 } else { 0 } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(line: &str) -> Outcome {
        execute(&RunConfig::parse(line.split_whitespace()).unwrap()).unwrap()
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(-0.0), fmt_float(0.0));
    }

    #[test]
    fn trivial_coefficients() {
        let out = run("coeffs --alpha 0 --c1 one --half-width 4");
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], "n,re,im");
        assert_eq!(lines.len(), 10);
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            let expect = if f[0] == "0" { 1.0 } else { 0.0 };
            assert_eq!(f[1].parse::<f64>().unwrap(), expect);
            assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn error_classes_map_to_statuses() {
        use toeplitz_fh::Error;
        assert_eq!(RunError::from(Error::Breakdown { step: 3, variance: -1.0 }).exit_code(), 3);
        assert_eq!(RunError::from(Error::NoConvergence { iterations: 10, residual: 1.0 }).exit_code(), 3);
        assert_eq!(RunError::from(Error::Hypothesis("x".into())).exit_code(), 2);
        assert_eq!(RunError::from(Error::OrderGuard { order: 600, limit: 512 }).exit_code(), 2);
    }

    #[test]
    fn failing_verdict_sets_status() {
        let out = run("verify morphos --alpha 0.25 --N 64,128,256 --threshold morphos-band=1.0");
        assert_eq!(out.status, 1, "{}", out.summary);
        assert!(out.csv.starts_with(VERIFY_HEADER));
    }
}
