//! Command-line workflows: certificates, α sweeps, solver runs, the LQR
//! demo and a self-test. Every failure is reported as a one-line JSON
//! object on stderr together with a distinct exit code.

mod input;

pub use input::{parse_grid, CertifyInput, FunctionSpec, ProblemInput, QuadraticSpec};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::certify::{
    audit, benchmark, certify_linear_rate, certify_objective_rate, certify_residual_rate,
    sweep_alpha, symbolic_sublinear, CertifyError, Mode, PointStatus, ProblemClasses,
    RateCertificate,
};
use crate::lmikit::{kron_identity, SymMatrix};
use crate::lqrdemo::{assemble_oracles, build_instance, run_sweep, write_sweep, LqrError};
use crate::sdpcore::{analytic_instances, solve_sdp, SdpSettings, SdpStatus};
use crate::tos::{reference_fixed_point, run_metrics, TosConfig, TosError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_MALFORMED: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "toscert",
    version,
    about = "Three-operator splitting with convergence-rate certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Produce a rate certificate and write it as JSON.
    Certify(CertifyArgs),
    /// Evaluate the certificate over a grid of stepsizes and write (alpha, rate) CSV.
    Sweep(SweepArgs),
    /// Run the splitting method on a problem described in JSON and write the trace CSV.
    Run(RunArgs),
    /// Box-constrained LQR for several relaxation parameters.
    DemoLqr(DemoArgs),
    /// Analytic SDP and Kronecker-reduction checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long = "tol-feas", default_value_t = 1e-8)]
    pub tol_feas: f64,
    #[arg(long = "tol-gap", default_value_t = 1e-8)]
    pub tol_gap: f64,
    /// Interior-point iteration limit.
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
}

impl SolverFlags {
    fn settings(&self) -> SdpSettings {
        SdpSettings {
            feas_tol: self.tol_feas,
            gap_tol: self.tol_gap,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// JSON with `mode`, `classes` (or `benchmark`), `alpha`, `lambda`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// One of the built-in class triples `a` to `f`.
    #[arg(long)]
    pub benchmark: Option<String>,
    /// linear, sublinearResidual or sublinearObjective.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub benchmark: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    /// `start:stop:points`, optionally followed by `:log` (default) or `:lin`.
    #[arg(long, default_value = "1e-3:1e1:25")]
    pub grid: String,
    /// Fix λ instead of optimizing it at every grid point.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem JSON: `f`, `g`, `h`, optional `z0`, `alpha`, `lambda`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Iterations of the reference run giving `z⋆` for the distance column
    /// (0 leaves the column empty).
    #[arg(long = "reference-iter", default_value_t = 0)]
    pub reference_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated relaxation parameters.
    #[arg(long, default_value = "0.25,0.5,1,1.5")]
    pub lambda: String,
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 20)]
    pub states: usize,
    #[arg(long, default_value_t = 5)]
    pub inputs: usize,
    #[arg(long, default_value_t = 20)]
    pub horizon: usize,
    /// Output directory for `lambda_<λ>.csv` and `summary.json`.
    #[arg(long, default_value = "lqr_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random bases in the Kronecker check.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
}

/// A failed command: exit code, error kind and message.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MALFORMED,
            kind: "malformed_input",
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message, "exit_code": self.code}).to_string()
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        let (code, kind) = match &e {
            CertifyError::AssumptionViolated(_) => (EXIT_INFEASIBLE, "assumption_violated"),
            CertifyError::Infeasible { .. }
            | CertifyError::NoLinearCertificate { .. }
            | CertifyError::AllInfeasible => (EXIT_INFEASIBLE, "infeasible"),
            CertifyError::InvalidParameter(_)
            | CertifyError::ClassPattern(_)
            | CertifyError::Dimension(_) => (EXIT_MALFORMED, "malformed_input"),
            CertifyError::Sdp(crate::sdpcore::SdpError::Settings(_)) => {
                (EXIT_MALFORMED, "malformed_input")
            }
            _ => (EXIT_FAILURE, "solver_failure"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<TosError> for CliError {
    fn from(e: TosError) -> Self {
        match e {
            TosError::NonFinite(_) => Self {
                code: EXIT_FAILURE,
                kind: "diverged",
                message: e.to_string(),
            },
            TosError::Io(_) => Self {
                code: EXIT_FAILURE,
                kind: "io",
                message: e.to_string(),
            },
            _ => Self::malformed(e.to_string()),
        }
    }
}

impl From<LqrError> for CliError {
    fn from(e: LqrError) -> Self {
        match e {
            LqrError::Tos(t) => t.into(),
            LqrError::Io(_) | LqrError::Json(_) => Self {
                code: EXIT_FAILURE,
                kind: "io",
                message: e.to_string(),
            },
            _ => Self::malformed(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_FAILURE,
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

/// Text produced by a command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => {
                    let err = CliError {
                        code: EXIT_USAGE,
                        kind: "usage",
                        message: e.to_string().trim().to_string(),
                    };
                    Outcome {
                        code: EXIT_USAGE,
                        stdout: String::new(),
                        stderr: err.to_json(),
                    }
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(stdout) => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: e.to_json(),
        },
    }
}

/// Runs one command, returning what it prints on success.
pub fn execute(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Certify(a) => certify_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::DemoLqr(a) => demo_cmd(a),
        Command::Selftest(a) => selftest_cmd(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<String, CliError> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| io_error(p, e))?;
            Ok(String::new())
        }
        None => Ok(text.to_string()),
    }
}

fn parse_mode(s: &str) -> Result<Mode, CliError> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        CliError::malformed(format!(
            "unknown mode {s:?} (linear, sublinearResidual, sublinearObjective)"
        ))
    })
}

fn resolve_classes(input: &CertifyInput, flag: Option<&str>) -> Result<ProblemClasses, CliError> {
    if let Some(label) = flag.or(input.benchmark.as_deref()) {
        return benchmark(label)
            .ok_or_else(|| CliError::malformed(format!("unknown benchmark {label:?}")));
    }
    input
        .classes
        .ok_or_else(|| CliError::malformed("no classes given (use `classes` or `benchmark`)"))
}

fn load_certify_input(path: Option<&Path>) -> Result<CertifyInput, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::malformed(format!("{}: {e}", p.display())))
        }
        None => Ok(CertifyInput::default()),
    }
}

/// The certificate for one `(mode, classes, α, λ)`; residual mode without
/// α uses the closed form.
pub fn certify_one(
    mode: Mode,
    classes: &ProblemClasses,
    alpha: Option<f64>,
    lambda: Option<f64>,
    settings: &SdpSettings,
) -> Result<RateCertificate, CliError> {
    let need_alpha = || alpha.ok_or_else(|| CliError::malformed("alpha is required for this mode"));
    let cert =
        match mode {
            Mode::Linear => certify_linear_rate(need_alpha()?, lambda, classes, settings)?,
            Mode::SublinearResidual => match alpha {
                Some(a) => certify_residual_rate(a, lambda, classes, settings)?,
                None => {
                    let lam = lambda.ok_or_else(|| {
                        CliError::malformed("give alpha, or lambda for the closed form")
                    })?;
                    let lh =
                        classes.h.lipschitz().finite().ok_or_else(|| {
                            CliError::malformed("closed form needs a finite L for h")
                        })?;
                    symbolic_sublinear(lam, lh)?
                }
            },
            Mode::SublinearObjective => {
                let lf =
                    classes.f.lipschitz().finite().ok_or_else(|| {
                        CliError::malformed("objective mode needs a finite L for f")
                    })?;
                let lh =
                    classes.h.lipschitz().finite().ok_or_else(|| {
                        CliError::malformed("objective mode needs a finite L for h")
                    })?;
                certify_objective_rate(need_alpha()?, lambda, lf, lh, settings)?
            }
        };
    Ok(cert)
}

fn certify_cmd(a: &CertifyArgs) -> Result<String, CliError> {
    let input = load_certify_input(a.input.as_deref())?;
    let mode = match a.mode.as_deref() {
        Some(m) => parse_mode(m)?,
        None => input.mode.unwrap_or(Mode::Linear),
    };
    let classes = resolve_classes(&input, a.benchmark.as_deref())?;
    let cert = certify_one(
        mode,
        &classes,
        a.alpha.or(input.alpha),
        a.lambda.or(input.lambda),
        &a.solver.settings(),
    )?;
    let text = serde_json::to_string_pretty(&cert).expect("certificate serializes") + "\n";
    emit(a.out.as_deref(), &text)
}

fn sweep_cmd(a: &SweepArgs) -> Result<String, CliError> {
    let input = load_certify_input(a.input.as_deref())?;
    let mode = match a.mode.as_deref() {
        Some(m) => parse_mode(m)?,
        None => input.mode.unwrap_or(Mode::Linear),
    };
    let classes = resolve_classes(&input, a.benchmark.as_deref())?;
    let grid = parse_grid(&a.grid).map_err(CliError::malformed)?;
    let settings = a.solver.settings();
    let lambda = a.lambda.or(input.lambda);
    let sweep = sweep_alpha(&grid, &classes, mode, lambda, &settings)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "rate", "status", "lambda"])
        .expect("in-memory write");
    for p in &sweep.curve {
        let status = match p.status {
            PointStatus::Certified => "certified",
            PointStatus::NoContraction => "no_contraction",
            PointStatus::Infeasible => "infeasible",
        };
        let lam = p
            .certificate
            .as_ref()
            .map(|c| c.lambda.to_string())
            .unwrap_or_default();
        w.write_record([
            p.alpha.to_string(),
            p.rate.to_string(),
            status.to_string(),
            lam,
        ])
        .expect("in-memory write");
    }
    let csv_text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8");
    let best = json!({
        "mode": sweep.mode,
        "best_alpha": sweep.best.alpha,
        "best_rate": sweep.best.rate,
        "best_lambda": sweep.best.certificate.as_ref().map(|c| c.lambda),
    });
    match a.out.as_deref() {
        Some(p) => {
            fs::write(p, csv_text).map_err(|e| io_error(p, e))?;
            Ok(best.to_string() + "\n")
        }
        None => Ok(csv_text),
    }
}

fn run_cmd(a: &RunArgs) -> Result<String, CliError> {
    let text = fs::read_to_string(&a.input).map_err(|e| io_error(&a.input, e))?;
    let input: ProblemInput = serde_json::from_str(&text)
        .map_err(|e| CliError::malformed(format!("{}: {e}", a.input.display())))?;
    let problem = input.build()?;
    let n = problem.h.dim();
    let z0 = match &input.z0 {
        Some(z) if z.len() == n => DVector::from_column_slice(z),
        Some(z) => {
            return Err(CliError::malformed(format!(
                "z0 has length {}, expected {n}",
                z.len()
            )))
        }
        None => DVector::zeros(n),
    };
    let alpha = a
        .alpha
        .or(input.alpha)
        .ok_or_else(|| CliError::malformed("alpha is required"))?;
    let lambda = a.lambda.or(input.lambda).unwrap_or(1.0);
    let max_iter = a.max_iter.or(input.max_iter).unwrap_or(1000);
    let cfg = TosConfig::new(alpha, lambda)?
        .with_max_iter(max_iter)?
        .with_residual_tol(input.residual_tol.unwrap_or(0.0))?;
    let zstar = if a.reference_iter > 0 {
        let rcfg = cfg
            .with_max_iter(a.reference_iter)?
            .with_residual_tol(0.0)?;
        Some(reference_fixed_point(&problem, &z0, &rcfg)?.z)
    } else {
        None
    };
    let (metrics, last) = run_metrics(&problem, &z0, &cfg, zstar.as_ref())?;
    let mut buf = Vec::new();
    metrics.write_csv(&mut buf)?;
    let csv_text = String::from_utf8(buf).expect("utf8");
    let summary = json!({
        "iterations": metrics.len() - 1,
        "converged": metrics.converged,
        "final_residual_norm2": metrics.residual_norm2.last(),
        "final_min_residual_norm2": metrics.min_residual_norm2().last(),
        "x_b": last.x_b.as_slice(),
    });
    match a.out.as_deref() {
        Some(p) => {
            fs::write(p, csv_text).map_err(|e| io_error(p, e))?;
            Ok(summary.to_string() + "\n")
        }
        None => Ok(csv_text),
    }
}

fn demo_cmd(a: &DemoArgs) -> Result<String, CliError> {
    let lambdas: Vec<f64> = a
        .lambda
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::malformed(format!("lambda list: {s:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if lambdas.is_empty() {
        return Err(CliError::malformed("empty lambda list"));
    }
    let inst = build_instance(a.seed, a.states, a.inputs, a.horizon)?;
    let oracle = assemble_oracles(&inst)?;
    let runs = run_sweep(&oracle, &lambdas, a.max_iter)?;
    write_sweep(&runs, &a.out)?;
    let summary: Vec<_> = runs.iter().map(|r| r.summary()).collect();
    Ok(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")
}

#[derive(Debug, Serialize)]
pub struct SelftestReport {
    pub sdp: Vec<SdpCheck>,
    pub kronecker: KroneckerCheck,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct SdpCheck {
    pub name: &'static str,
    pub expected: f64,
    pub objective: f64,
    pub error: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct KroneckerCheck {
    pub samples: usize,
    pub worst_eig_gap: f64,
    pub nsd_mismatches: usize,
    pub passed: bool,
}

/// Solves the analytic SDPs and compares `base` with `base ⊗ I_d` for
/// random symmetric bases of size 4 and 5 and `d ∈ {1, 2, 3}`; half of
/// the bases are negative semidefinite by construction.
pub fn selftest(seed: u64, samples: usize, settings: &SdpSettings) -> SelftestReport {
    let sdp: Vec<SdpCheck> = analytic_instances()
        .into_iter()
        .map(|(name, p, expected, _)| {
            let (objective, ok) = match solve_sdp(&p, settings) {
                Ok(s) => (s.objective, s.status == SdpStatus::Optimal),
                Err(_) => (f64::NAN, false),
            };
            let error = (objective - expected).abs();
            SdpCheck {
                name,
                expected,
                objective,
                error,
                passed: ok && error <= 1e-8,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for i in 0..samples {
        let n = 4 + i % 2;
        let m = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let base = if i % 4 < 2 {
            -(&m * m.transpose())
        } else {
            let s = &m + m.transpose();
            let shift = rng.random_range(-3.0..1.0);
            s + nalgebra::DMatrix::identity(n, n) * shift
        };
        let base = SymMatrix::symmetrize(&base).expect("finite");
        let top = base.max_eig();
        for d in 1..=3 {
            let k = kron_identity(&base, d).expect("small dimension");
            let tk = k.max_eig();
            worst = worst.max((tk - top).abs());
            let tol = 1e-12;
            if (top <= tol) != (tk <= tol) {
                mismatches += 1;
            }
        }
    }
    let kronecker = KroneckerCheck {
        samples,
        worst_eig_gap: worst,
        nsd_mismatches: mismatches,
        passed: worst <= 1e-10 && mismatches == 0,
    };
    let passed = sdp.iter().all(|c| c.passed) && kronecker.passed;
    SelftestReport {
        sdp,
        kronecker,
        passed,
    }
}

fn selftest_cmd(a: &SelftestArgs) -> Result<String, CliError> {
    let report = selftest(a.seed, a.samples, &SdpSettings::default());
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if report.passed {
        Ok(text)
    } else {
        Err(CliError {
            code: EXIT_FAILURE,
            kind: "selftest_failed",
            message: text,
        })
    }
}

/// Re-reads a certificate file and returns its audit value.
pub fn reaudit(path: &Path) -> Result<f64, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let cert: RateCertificate = serde_json::from_str(&text)
        .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
    Ok(audit(&cert)?)
}

/// Writes an [`Outcome`] to the process streams and returns its code.
pub fn report(outcome: &Outcome) -> i32 {
    if !outcome.stdout.is_empty() {
        let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    }
    if !outcome.stderr.is_empty() {
        let _ = writeln!(std::io::stderr(), "{}", outcome.stderr);
    }
    outcome.code
}
