//! Command-line front end.
//!
//! Exit codes: 0 pass (or valid certificate), 2 configuration error,
//! 3 violation found, 4 invalid certificate.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auditor::{
    audit, verify_certificate, AuditConfig, CheckerVerdicts, ErrorCensus, ViolationCertificate,
    GAP_THRESHOLD,
};
use crate::decision::{DecisionProblem, Selector, Welfare, WelfareMode};
use crate::distortions::{CoarseVerdict, Distortion, StubbornVerdict};
use crate::par::{self, Execution};
use crate::simplex::{random_interior, Belief, Face};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Config = 2,
    Violation = 3,
    InvalidCertificate = 4,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "blackwell-audit",
    version,
    about = "Audit belief-updating rules against the Blackwell order"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify errors, run the structural checkers and search for a violation.
    Audit(AuditArgs),
    /// Write the worked examples as CSV tables.
    Reproduce(ReproduceArgs),
    /// Re-check a certificate file.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Single,
    Double,
}

impl From<ModeArg> for WelfareMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => WelfareMode::Single,
            ModeArg::Double => WelfareMode::Double,
        }
    }
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub states: usize,
    /// A probability vector `0.2,0.3,0.5`, `uniform`, or `sweep:k`.
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// Shorthand (`grether(2,1)`), inline JSON, or a path to a JSON file.
    #[arg(long)]
    pub rule: String,
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long, default_value_t = 5000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: ModeArg,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Worker threads for the audit internals.
    #[arg(long, env = "BLACKWELL_AUDIT_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleId {
    OccCoarseFigure,
    OccStubbornA,
    OccStubbornB,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub example: ExampleId,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub a: f64,
    #[arg(long, default_value_t = 0.7)]
    pub b: f64,
    #[arg(long, default_value_t = 0.2)]
    pub u: f64,
    #[arg(long, default_value_t = 0.8)]
    pub v: f64,
    /// Samples per face for the three-state tables.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub certificate: PathBuf,
    #[arg(long, default_value_t = GAP_THRESHOLD)]
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorSpec {
    Fixed(Belief),
    Uniform,
    Sweep(usize),
}

impl PriorSpec {
    pub fn parse(s: &str, n: usize) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(PriorSpec::Uniform);
        }
        if let Some(k) = s.strip_prefix("sweep:") {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| config(format!("bad sweep count '{k}'")))?;
            if k == 0 {
                return Err(config("sweep needs at least one prior"));
            }
            return Ok(PriorSpec::Sweep(k));
        }
        let coords = s
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| config(format!("bad prior '{s}'")))?;
        let b = Belief::new(coords).map_err(config)?;
        if b.dim() != n {
            return Err(config(format!(
                "prior has {} states, expected {n}",
                b.dim()
            )));
        }
        if !b.is_interior() {
            return Err(config("prior must be interior"));
        }
        Ok(PriorSpec::Fixed(b))
    }

    /// Sweeps draw interior priors (coordinates at least 0.05) from the seed.
    pub fn priors(&self, n: usize, seed: u64) -> Vec<Belief> {
        match self {
            PriorSpec::Fixed(b) => vec![b.clone()],
            PriorSpec::Uniform => vec![Belief::uniform(n)],
            PriorSpec::Sweep(k) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..*k)
                    .map(|_| random_interior(&mut rng, n, 0.05))
                    .collect()
            }
        }
    }
}

/// Everything an audit run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub states: usize,
    pub prior: PriorSpec,
    pub rule: Distortion,
    pub grid: usize,
    pub budget: usize,
    pub seed: u64,
    pub tol: f64,
    pub mode: ModeArg,
    #[serde(skip)]
    pub output: PathBuf,
}

/// Shorthand, inline JSON, or a file holding either.
pub fn load_rule(s: &str) -> Result<Distortion, CliError> {
    let text = if !s.trim_start().starts_with('{') && Path::new(s).is_file() {
        std::fs::read_to_string(s).map_err(|source| CliError::Io {
            path: s.into(),
            source,
        })?
    } else {
        s.to_string()
    };
    text.parse::<Distortion>().map_err(config)
}

impl RunConfig {
    pub fn from_args(a: &AuditArgs) -> Result<Self, CliError> {
        if a.states < 2 {
            return Err(config("--states must be at least 2"));
        }
        if a.grid < 11 {
            return Err(config("--grid must be at least 11"));
        }
        if a.budget == 0 {
            return Err(config("--budget must be positive"));
        }
        if !(a.tol.is_finite() && a.tol > 0.0) {
            return Err(config("--tol must be positive"));
        }
        let rule = load_rule(&a.rule)?;
        if let Some(k) = rule.fixed_states() {
            if k != a.states {
                return Err(config(format!(
                    "rule is defined for {k} states, --states is {}",
                    a.states
                )));
            }
        }
        Ok(Self {
            states: a.states,
            prior: PriorSpec::parse(&a.prior, a.states)?,
            rule,
            grid: a.grid,
            budget: a.budget,
            seed: a.seed,
            tol: a.tol,
            mode: a.mode,
            output: a.out.clone(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub prior: Belief,
    pub verdict: Verdict,
    pub pairs_tried: usize,
    pub checker_summary: String,
    pub checker_verdicts: CheckerVerdicts,
    pub error_census: ErrorCensus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ViolationCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub verdict: Verdict,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ViolationCertificate>,
    pub checker_summary: String,
    pub checker_verdicts: CheckerVerdicts,
    pub error_census: ErrorCensus,
    pub runs: Vec<RunReport>,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// One-line description of the structural verdict.
pub fn describe_checkers(c: &CheckerVerdicts) -> String {
    let mut parts = Vec::new();
    match &c.coarse {
        Some(CoarseVerdict::Coarse { a, b, .. }) => parts.push(format!(
            "occasionally coarse, a={}, b={}",
            round6(*a),
            round6(*b)
        )),
        Some(CoarseVerdict::Refuted { x, condition, .. }) => parts.push(format!(
            "not occasionally coarse (condition {condition} fails at x={})",
            round6(*x)
        )),
        None => {}
    }
    match &c.stubborn {
        Some(StubbornVerdict::Stubborn { x_star, .. }) => match x_star {
            Some(x) => parts.push(format!(
                "occasionally stubborn, x*=({})",
                x.coords()
                    .iter()
                    .map(|v| round6(*v).to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )),
            None => parts.push("occasionally stubborn, no errors".into()),
        },
        Some(StubbornVerdict::Refuted { item, .. }) => {
            parts.push(format!("not occasionally stubborn ({item:?})"))
        }
        None => {}
    }
    if c.trivial {
        parts.push("trivial on the interior".into());
    }
    if c.affine {
        parts.push("affine".into());
    }
    parts.join("; ")
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Certificate path for a report path: `out.json` → `out.certificate.json`.
pub fn certificate_path(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    report.with_file_name(format!("{stem}.certificate.json"))
}

/// Runs the audit for every configured prior and writes the report.
pub fn run_audit(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let audit_cfg = AuditConfig {
        grid: cfg.grid,
        budget: cfg.budget,
        mode: cfg.mode.into(),
        seed: cfg.seed,
        tol: cfg.tol,
        exec,
    };
    let mut runs = Vec::new();
    for prior in cfg.prior.priors(cfg.states, cfg.seed) {
        let out = audit(&cfg.rule, &prior, &audit_cfg).map_err(config)?;
        runs.push(RunReport {
            verdict: if out.certificate.is_some() {
                Verdict::Violation
            } else {
                Verdict::Pass
            },
            prior,
            pairs_tried: out.pairs_tried,
            checker_summary: describe_checkers(&out.checkers),
            checker_verdicts: out.checkers,
            error_census: out.census,
            certificate: out.certificate,
        });
    }
    let lead = runs
        .iter()
        .find(|r| r.verdict == Verdict::Violation)
        .unwrap_or(&runs[0])
        .clone();
    Ok(Report {
        verdict: lead.verdict,
        config: cfg.clone(),
        certificate: lead.certificate,
        checker_summary: lead.checker_summary,
        checker_verdicts: lead.checker_verdicts,
        error_census: lead.error_census,
        runs,
    })
}

pub fn cmd_audit(cfg: &RunConfig) -> Result<Exit, CliError> {
    let report = run_audit(cfg, Execution::Parallel)?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&cfg.output, json.as_bytes())?;
    if let Some(c) = &report.certificate {
        write_atomic(&certificate_path(&cfg.output), c.to_json().as_bytes())?;
    }
    Ok(match report.verdict {
        Verdict::Pass => Exit::Pass,
        Verdict::Violation => Exit::Violation,
    })
}

pub fn cmd_verify(path: &Path, tol: f64) -> Result<(Exit, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let c: ViolationCertificate = serde_json::from_str(&text).map_err(config)?;
    let v = verify_certificate(&c, tol);
    if v.valid {
        Ok((Exit::Pass, format!("valid: gap {:e} ({})", c.gap, c.recipe)))
    } else {
        let reason = v.reason.unwrap_or_default();
        let detail = v.detail.unwrap_or_default();
        Ok((
            Exit::InvalidCertificate,
            format!("invalid: {reason} ({detail})"),
        ))
    }
}

/// Columns `x, phi, V, W` on `{0, 0.001, ..., 1}` under quadratic loss
/// shifted by 0.3, with actions on the same grid.
pub fn coarse_figure_csv(a: f64, b: f64, u: f64, v: f64) -> Result<String, CliError> {
    let rule = Distortion::occ_coarse(a, b, u, v).map_err(config)?;
    let prior = Belief::binary(0.5);
    let problem = DecisionProblem::quadratic_loss(1001, 0.3);
    let selector = Selector::default();
    let welfare = Welfare {
        problem: &problem,
        rule: &rule,
        prior: &prior,
        selector: &selector,
        mode: WelfareMode::Single,
    };
    let mut out = String::from("x,phi,V,W\n");
    for i in 0..=1000 {
        let x = Belief::binary(i as f64 / 1000.0);
        let phi = rule.evaluate(&prior, &x).map_err(config)?;
        let value = crate::decision::value_v(&problem, &x).0;
        let w = welfare.at(&x).map_err(config)?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            x.coords()[0],
            phi.coords()[0],
            value,
            w
        ));
    }
    Ok(out)
}

/// Columns `x1, x2, phi1, phi2`: vertices, then seeded samples from the
/// relative interior of every edge and of the whole triangle.
pub fn stubborn_csv(rule: &Distortion, samples: usize) -> Result<String, CliError> {
    let n = 3;
    let prior = Belief::uniform(n);
    let mut out = String::from("x1,x2,phi1,phi2\n");
    for face in Face::all(n) {
        let points = if face.dim() == 0 {
            vec![Belief::vertex(n, face.support()[0])]
        } else {
            face.relint_samples(n, samples)
        };
        for x in points {
            let y = rule.evaluate(&prior, &x).map_err(config)?;
            let (xc, yc) = (x.coords(), y.coords());
            out.push_str(&format!("{},{},{},{}\n", xc[0], xc[1], yc[0], yc[1]));
        }
    }
    Ok(out)
}

pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    let (name, body) = match args.example {
        ExampleId::OccCoarseFigure => (
            "occ-coarse-figure.csv",
            coarse_figure_csv(args.a, args.b, args.u, args.v)?,
        ),
        // Uses the misaligned common image on purpose; `Distortion::stubborn_a`
        // is the variant consistent with the vertex images.
        ExampleId::OccStubbornA => (
            "occ-stubborn-a.csv",
            stubborn_csv(&Distortion::stubborn_a_misaligned(), args.samples)?,
        ),
        ExampleId::OccStubbornB => (
            "occ-stubborn-b.csv",
            stubborn_csv(&Distortion::stubborn_b(), args.samples)?,
        ),
    };
    let path = args.out.join(name);
    write_atomic(&path, body.as_bytes())?;
    Ok(vec![path])
}

/// Dispatches a parsed command line and returns the exit status.
pub fn run(cli: Cli) -> Exit {
    match cli.command {
        Command::Audit(a) => {
            if let Some(t) = a.threads {
                par::init_threads(t.max(1));
            }
            let result = RunConfig::from_args(&a).and_then(|cfg| {
                let exit = cmd_audit(&cfg)?;
                Ok((cfg, exit))
            });
            match result {
                Ok((cfg, exit)) => {
                    match exit {
                        Exit::Violation => println!(
                            "violation: certificate written to {}",
                            certificate_path(&cfg.output).display()
                        ),
                        _ => println!("pass: report written to {}", cfg.output.display()),
                    }
                    exit
                }
                Err(e) => {
                    eprintln!("{e}");
                    Exit::Config
                }
            }
        }
        Command::Reproduce(r) => match cmd_reproduce(&r) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                Exit::Pass
            }
            Err(e) => {
                eprintln!("{e}");
                Exit::Config
            }
        },
        Command::Verify(v) => match cmd_verify(&v.certificate, v.tol) {
            Ok((exit, msg)) => {
                println!("{msg}");
                exit
            }
            Err(e) => {
                eprintln!("{e}");
                Exit::Config
            }
        },
    }
}
