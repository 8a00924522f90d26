//! Command-line grammar and the normalized run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use toeplitz_fh::experiments::{TheoremId, Thresholds};
use toeplitz_fh::fh_symbols::SymbolSpec;
use toeplitz_fh::spectra::DEFAULT_SEED;

const AFTER_HELP: &str = "\
CSV columns:
  coeffs       n,re,im
  eig          alpha,N,lambda_min,scaled,iterations,residual
  kernel-norm  alpha,M,diagonal,norm,inverse_norm
  verify/sweep theorem,alpha,N,measured,predicted,residual,verdict,group,x,y,k

Exit status: 0 success or non-failing verdict, 1 fail verdict, 2 usage error,
3 numerical error. TOEPLITZ_FH_THREADS caps the worker threads.";

#[derive(Debug, Parser)]
#[command(name = "toeplitz-fh", version, about = "Toeplitz matrices with a Fisher-Hartwig zero: tables, eigenvalues, kernel norms and convergence checks", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fourier coefficients of the symbol (or of its reciprocal).
    Coeffs(CoeffsArgs),
    /// Smallest eigenvalue of T_N for each listed N.
    Eig(EigArgs),
    /// Operator norm of the discretized kernel G_α.
    KernelNorm(KernelArgs),
    /// Run one convergence check.
    Verify(VerifyArgs),
    /// Run a convergence check once per listed alpha.
    Sweep(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "one", allow_hyphen_values = true)]
    pub c1: C1Choice,
    #[arg(long)]
    pub half_width: usize,
    /// Coefficients of 1/φ instead of φ.
    #[arg(long)]
    pub inverse: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "one", allow_hyphen_values = true)]
    pub c1: C1Choice,
    #[arg(long = "N", value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long = "M")]
    pub m: usize,
    #[arg(long, value_enum, default_value_t = Diagonal::Corrected)]
    pub diagonal: Diagonal,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub theorem: TheoremArg,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<C1Choice>,
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Border width for inverse2, as a fraction of N.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Sample coordinates for noyau/inverse1; all off-diagonal pairs are used.
    #[arg(long, value_delimiter = ',')]
    pub points: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Override a verdict threshold, e.g. `--threshold principal=0.02`.
    #[arg(long = "threshold", value_parser = parse_threshold)]
    pub thresholds: Vec<(ThresholdKey, f64)>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Diagonal {
    Zero,
    Corrected,
}

/// Theorem name as accepted on the command line (`half-lemma` or `half_lemma`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremArg(pub TheoremId);

impl FromStr for TheoremArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<TheoremId>().map(TheoremArg).map_err(|e| e.to_string())
    }
}

/// The regular factor `c₁`: a named preset or its coefficients `ĉ(−d..=d)`.
#[derive(Debug, Clone, PartialEq)]
pub enum C1Choice {
    One,
    ShiftedCos,
    Coeffs(Vec<f64>),
}

impl C1Choice {
    pub fn spec(&self, alpha: f64) -> toeplitz_fh::Result<SymbolSpec> {
        match self {
            C1Choice::One => SymbolSpec::one(alpha),
            C1Choice::ShiftedCos => SymbolSpec::shifted_cos(alpha),
            C1Choice::Coeffs(c) => SymbolSpec::new(alpha, c.iter().map(|&v| Complex64::new(v, 0.0)).collect()),
        }
    }
}

impl FromStr for C1Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one" => Ok(C1Choice::One),
            "shifted-cos" => Ok(C1Choice::ShiftedCos),
            _ => {
                let coeffs = s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad coefficient '{t}': {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if coeffs.len() % 2 == 0 {
                    return Err(format!("expected an odd number of coefficients c(-d..=d), got {}", coeffs.len()));
                }
                Ok(C1Choice::Coeffs(coeffs))
            }
        }
    }
}

impl fmt::Display for C1Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            C1Choice::One => f.write_str("one"),
            C1Choice::ShiftedCos => f.write_str("shifted-cos"),
            C1Choice::Coeffs(c) => f.write_str(&join(c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdKey {
    Principal,
    Prod,
    Noyau,
    Inverse1,
    PredictorBulk,
    PredictorEdge,
    MorphosBand,
    HalfLemmaRatio,
    Widom,
    DecreaseSlack,
}

impl ThresholdKey {
    fn name(self) -> &'static str {
        match self {
            ThresholdKey::Principal => "principal",
            ThresholdKey::Prod => "prod",
            ThresholdKey::Noyau => "noyau",
            ThresholdKey::Inverse1 => "inverse1",
            ThresholdKey::PredictorBulk => "predictor_bulk",
            ThresholdKey::PredictorEdge => "predictor_edge",
            ThresholdKey::MorphosBand => "morphos_band",
            ThresholdKey::HalfLemmaRatio => "half_lemma_ratio",
            ThresholdKey::Widom => "widom",
            ThresholdKey::DecreaseSlack => "decrease_slack",
        }
    }

    fn apply(self, t: &mut Thresholds, v: f64) {
        let slot = match self {
            ThresholdKey::Principal => &mut t.principal,
            ThresholdKey::Prod => &mut t.prod,
            ThresholdKey::Noyau => &mut t.noyau,
            ThresholdKey::Inverse1 => &mut t.inverse1,
            ThresholdKey::PredictorBulk => &mut t.predictor_bulk,
            ThresholdKey::PredictorEdge => &mut t.predictor_edge,
            ThresholdKey::MorphosBand => &mut t.morphos_band,
            ThresholdKey::HalfLemmaRatio => &mut t.half_lemma_ratio,
            ThresholdKey::Widom => &mut t.widom,
            ThresholdKey::DecreaseSlack => &mut t.decrease_slack,
        };
        *slot = v;
    }
}

fn parse_threshold(s: &str) -> Result<(ThresholdKey, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let key = ThresholdKey::from_str(&k.trim().replace('_', "-"), true)?;
    let value: f64 = v.trim().parse().map_err(|e| format!("bad threshold value '{v}': {e}"))?;
    if !(value.is_finite() && value >= 0.0) {
        return Err(format!("threshold {k} must be finite and nonnegative"));
    }
    Ok((key, value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Coeffs,
    Eig,
    KernelNorm,
    Verify,
    Sweep,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Coeffs => "coeffs",
            CommandKind::Eig => "eig",
            CommandKind::KernelNorm => "kernel-norm",
            CommandKind::Verify => "verify",
            CommandKind::Sweep => "sweep",
        }
    }
}

/// A validated invocation. `Display` renders the canonical argument list,
/// which parses back to an equal configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub theorem: Option<TheoremId>,
    pub alphas: Vec<f64>,
    pub c1: Option<C1Choice>,
    pub ns: Vec<usize>,
    pub m: Option<usize>,
    pub half_width: Option<usize>,
    pub inverse: bool,
    pub diagonal: Option<Diagonal>,
    pub delta: Option<f64>,
    pub points: Vec<f64>,
    pub seed: u64,
    pub thresholds: Vec<(ThresholdKey, f64)>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Usage(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ConfigError::Usage(m) = self;
        f.write_str(m)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Usage(msg.into()))
}

impl RunConfig {
    fn empty(command: CommandKind, seed: u64) -> Self {
        RunConfig {
            command,
            theorem: None,
            alphas: Vec::new(),
            c1: None,
            ns: Vec::new(),
            m: None,
            half_width: None,
            inverse: false,
            diagonal: None,
            delta: None,
            points: Vec::new(),
            seed,
            thresholds: Vec::new(),
            output: None,
        }
    }

    /// Parses and validates an argument list (without the program name).
    pub fn parse<I, S>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let argv = std::iter::once(std::ffi::OsString::from("toeplitz-fh")).chain(args.into_iter().map(Into::into));
        let cli = Cli::try_parse_from(argv)?;
        RunConfig::from_cli(cli).map_err(|ConfigError::Usage(m)| {
            clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{m}\n"))
        })
    }

    pub fn from_cli(cli: Cli) -> Result<Self, ConfigError> {
        let config = match cli.command {
            Command::Coeffs(a) => RunConfig {
                alphas: vec![a.alpha],
                c1: Some(a.c1),
                half_width: Some(a.half_width),
                inverse: a.inverse,
                output: a.output,
                ..RunConfig::empty(CommandKind::Coeffs, DEFAULT_SEED)
            },
            Command::Eig(a) => RunConfig {
                alphas: vec![a.alpha],
                c1: Some(a.c1),
                ns: a.n,
                output: a.output,
                ..RunConfig::empty(CommandKind::Eig, a.seed)
            },
            Command::KernelNorm(a) => RunConfig {
                alphas: a.alpha,
                m: Some(a.m),
                diagonal: Some(a.diagonal),
                output: a.output,
                ..RunConfig::empty(CommandKind::KernelNorm, a.seed)
            },
            Command::Verify(a) => Self::from_verify(CommandKind::Verify, a),
            Command::Sweep(a) => Self::from_verify(CommandKind::Sweep, a),
        };
        config.validate()?;
        Ok(config)
    }

    fn from_verify(command: CommandKind, a: VerifyArgs) -> Self {
        RunConfig {
            theorem: Some(a.theorem.0),
            alphas: a.alpha,
            c1: a.c1,
            ns: a.n,
            m: a.m,
            delta: a.delta,
            points: a.points,
            thresholds: a.thresholds,
            output: a.output,
            ..RunConfig::empty(command, a.seed)
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        let mut t = Thresholds::default();
        for &(k, v) in &self.thresholds {
            k.apply(&mut t, v);
        }
        t
    }

    pub fn c1_or_default(&self) -> C1Choice {
        self.c1.clone().unwrap_or(C1Choice::One)
    }

    /// Rejects parameter combinations the drivers cannot use, before any
    /// numerical work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return usage(format!("--N must be strictly ascending: {:?}", self.ns));
        }
        if let Some(&a) = self.alphas.iter().find(|a| !(0.0..=0.5).contains(*a)) {
            return usage(format!("alpha = {a} outside [0, 1/2]"));
        }
        if let Some(c1) = &self.c1 {
            for &a in &self.alphas {
                c1.spec(a).map_err(|e| ConfigError::Usage(e.to_string()))?;
            }
        }
        match self.command {
            CommandKind::Coeffs => Ok(()),
            CommandKind::Eig => {
                if self.ns.is_empty() {
                    return usage("eig needs --N");
                }
                Ok(())
            }
            CommandKind::KernelNorm => {
                if self.alphas.contains(&0.0) {
                    return usage("kernel-norm needs alpha > 0");
                }
                if self.m.unwrap_or(0) < 16 {
                    return usage("--M must be at least 16");
                }
                Ok(())
            }
            CommandKind::Verify | CommandKind::Sweep => self.validate_check(),
        }
    }

    fn validate_check(&self) -> Result<(), ConfigError> {
        use TheoremId::*;
        let t = self.theorem.expect("verify carries a theorem");
        let sweep = self.command == CommandKind::Sweep;
        let name = t.as_str();
        let alphas_needed: Option<usize> = match t {
            Prod => Some(2),
            Widom => Some(0),
            HalfLemma | Bounds => None,
            _ => Some(1),
        };
        if sweep {
            if alphas_needed != Some(1) {
                return usage(format!("sweep runs one alpha at a time; use verify for {name}"));
            }
            if self.alphas.is_empty() {
                return usage("sweep needs at least one --alpha");
            }
        } else {
            match alphas_needed {
                Some(k) if self.alphas.len() != k => {
                    return usage(format!("{name} takes exactly {k} --alpha value(s), got {}", self.alphas.len()))
                }
                None if self.alphas.is_empty() => return usage(format!("{name} needs --alpha")),
                _ => {}
            }
        }
        let uses_m = matches!(t, Principal | Prod | Bounds);
        let uses_c1 = !matches!(t, Widom | Bounds);
        let uses_n = t != Bounds;
        if self.m.is_some() && !uses_m {
            return usage(format!("--M does not apply to {name}"));
        }
        if self.c1.is_some() && !uses_c1 {
            return usage(format!("--c1 does not apply to {name}"));
        }
        if !self.points.is_empty() && !matches!(t, Noyau | Inverse1) {
            return usage(format!("--points does not apply to {name}"));
        }
        if self.delta.is_some() && t != Inverse2 {
            return usage(format!("--delta does not apply to {name}"));
        }
        if uses_n && self.ns.is_empty() {
            return usage(format!("{name} needs --N"));
        }
        if !uses_n && !self.ns.is_empty() {
            return usage(format!("--N does not apply to {name}"));
        }
        if t == Inverse2 && self.ns.len() != 1 {
            return usage("inverse2 takes a single --N (the check runs at N and 2N)");
        }
        if matches!(t, Principal | Prod | Noyau | Inverse1 | Predictor | Rappel | Morphos | HalfLemma) && self.ns.len() < 2 {
            return usage(format!("{name} needs at least two sizes in --N"));
        }
        if matches!(t, Principal) && self.m.is_some_and(|m| m < 500) {
            return usage("principal needs --M >= 500");
        }
        if t == Prod && self.alphas.iter().sum::<f64>() <= 0.5 {
            return usage("prod needs alpha1 + alpha2 > 1/2");
        }
        if matches!(t, Inverse1 | Inverse2 | Noyau | Bounds | HalfLemma) && self.alphas.contains(&0.0) {
            return usage(format!("{name} needs alpha > 0"));
        }
        if matches!(t, HalfLemma | Inverse2 | Morphos) && self.alphas.contains(&0.5) {
            return usage(format!("{name} needs alpha < 1/2"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 0.25) {
                return usage("--delta must lie in (0, 1/4)");
            }
        }
        Ok(())
    }

    /// Canonical argument list.
    pub fn to_args(&self) -> Vec<String> {
        let mut v: Vec<String> = vec![self.command.name().into()];
        if let Some(t) = self.theorem {
            v.push(t.as_str().into());
        }
        let mut flag = |name: &str, value: String| {
            v.push(format!("--{name}"));
            v.push(value);
        };
        if !self.alphas.is_empty() {
            flag("alpha", join(&self.alphas));
        }
        if let Some(c) = &self.c1 {
            flag("c1", c.to_string());
        }
        if let Some(h) = self.half_width {
            flag("half-width", h.to_string());
        }
        if !self.ns.is_empty() {
            flag("N", join(&self.ns));
        }
        if let Some(m) = self.m {
            flag("M", m.to_string());
        }
        if let Some(d) = self.diagonal {
            flag("diagonal", d.to_possible_value().expect("no skipped variants").get_name().to_string());
        }
        if let Some(d) = self.delta {
            flag("delta", d.to_string());
        }
        if !self.points.is_empty() {
            flag("points", join(&self.points));
        }
        if self.command != CommandKind::Coeffs {
            flag("seed", self.seed.to_string());
        }
        for (k, val) in &self.thresholds {
            flag("threshold", format!("{}={val}", k.name()));
        }
        if let Some(o) = &self.output {
            flag("output", o.display().to_string());
        }
        if self.inverse {
            v.push("--inverse".into());
        }
        v
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_args().join(" "))
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, clap::Error> {
        RunConfig::parse(s.split_whitespace())
    }

    #[test]
    fn round_trips_through_text() {
        for line in [
            "verify principal --alpha 0.3 --c1 one --N 256,512,1024,2048 --M 800 -o out.csv",
            "coeffs --alpha 0 --c1 one --half-width 4",
            "coeffs --alpha 0.25 --c1 0.5,2,0.5 --half-width 8 --inverse",
            "eig --alpha 0.25 --c1 shifted-cos --N 32,64 --seed 9",
            "kernel-norm --alpha 0.2,0.3 --M 400 --diagonal zero",
            "verify prod --alpha 0.3,0.4 --N 64,128 --M 200 --threshold prod=0.1 --threshold decrease-slack=0.2",
            "verify inverse2 --alpha 0.3 --N 2048 --delta 0.05",
            "verify noyau --alpha 0.3 --N 256,512 --points 0.25,0.75",
            "verify half-lemma --alpha 0.375,0.4375 --N 64,256",
            "verify widom --N 8,16 --seed 3",
            "verify bounds --alpha 0.1,0.2 --M 500",
            "sweep predictor --alpha 0.2,0.3 --c1 shifted-cos --N 64,128",
        ] {
            let first = parse(line).unwrap_or_else(|e| panic!("{line}: {e}"));
            let again = RunConfig::parse(first.to_args()).unwrap();
            assert_eq!(first, again, "{line}");
            assert_eq!(first.to_string(), again.to_string());
        }
    }

    #[test]
    fn rejects_invalid_combinations() {
        for line in [
            "verify prod --alpha 0.2,0.25 --N 64,128",
            "verify prod --alpha 0.3 --N 64,128",
            "verify principal --alpha 0.3 --N 128,64",
            "verify principal --alpha 0.3 --N 64",
            "verify principal --alpha 0.3 --N 64,128 --M 100",
            "verify widom --alpha 0.3 --N 8",
            "verify bounds --alpha 0.2 --N 64",
            "verify noyau --alpha 0.3 --N 64,128 --M 100",
            "verify inverse2 --alpha 0.3 --N 512,1024",
            "verify inverse2 --alpha 0.3 --N 512 --delta 0.3",
            "verify principal --alpha 0.7 --N 64,128",
            "verify principal --alpha 0.3 --c1 1,3 --N 64,128",
            "verify principal --alpha 0.3 --c1 1,1,1 --N 64,128",
            "verify nonsense --alpha 0.3",
            "verify principal --alpha 0.3 --N 64,128 --threshold bogus=1",
            "sweep prod --alpha 0.3,0.4 --N 64,128",
            "eig --alpha 0.3",
            "kernel-norm --alpha 0.3 --M 8",
            "coeffs --alpha 0.3 --M 8 --half-width 4",
        ] {
            assert!(parse(line).is_err(), "accepted: {line}");
        }
    }

    #[test]
    fn threshold_overrides_apply() {
        let c = parse("verify principal --alpha 0.3 --N 64,128 --threshold principal=0.01 --threshold morphos_band=2").unwrap();
        let t = c.thresholds();
        assert_eq!(t.principal, 0.01);
        assert_eq!(t.morphos_band, 2.0);
        assert_eq!(t.prod, Thresholds::default().prod);
    }

    #[test]
    fn negative_coefficients_parse() {
        let c = parse("coeffs --alpha 0.2 --c1 -0.5,3,-0.5 --half-width 2").unwrap();
        assert_eq!(c.c1, Some(C1Choice::Coeffs(vec![-0.5, 3.0, -0.5])));
    }
}
