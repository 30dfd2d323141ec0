//! `moment-bc` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical rejection.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bc_operators::{check_admissibility, connecting_from_response, Admissibility};
use crate::dynamics::{response_vector, simulate_finite, Control, ResponseMethod, ResponseVector};
use crate::io::{wavefield_csv, write_text, Document, Kind, Meta};
use crate::jacobi::JacobiSpec;
use crate::linalg::singular_values;
use crate::moments::{moments_to_response, response_to_moments, MomentSequence};
use crate::pipeline::{
    convergence_scan, jacobi_measure, recover_coefficients, solve_truncated, verify_measure, Backend,
    DegeneratePolicy, PipelineError, RecoveryOptions, RecoveryWarning, SolveOptions,
};
use crate::spectral::{spectral_response, DiscreteMeasure};
use crate::{testing, ComplexScalar};

/// Environment variable fixing the generator used by `--demo`.
pub const SEED_VAR: &str = "MOMENT_BC_SEED";

#[derive(Debug, Parser)]
#[command(name = "moment-bc", version, about = "Truncated complex moment problem via boundary control")]
struct Cli {
    /// Relative singular-value threshold for singularity tests.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_singular: f64,
    /// Tolerance for moment residuals.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_residual: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Source {
    /// Input document.
    #[arg(long = "in", value_name = "PATH", required_unless_present = "demo")]
    input: Option<PathBuf>,
    /// Use a random spec of size N instead of a file.
    #[arg(long, value_name = "N", conflicts_with = "input")]
    demo: Option<usize>,
}

#[derive(Debug, Args)]
struct Output {
    /// Output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Timestep,
    Kernel,
    Spectral,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Takagi,
    Eigen,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Jacobi spec and control to wavefield CSV.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// JSON array of `[re, im]` control samples; impulse when omitted.
        #[arg(long, value_name = "PATH")]
        control: Option<PathBuf>,
        /// Last time step; defaults to 2N.
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Jacobi spec to response vector.
    Response {
        #[command(flatten)]
        source: Source,
        /// Number of entries; defaults to 2N - 1.
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, value_enum, default_value = "timestep")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "takagi")]
        backend: BackendArg,
        #[command(flatten)]
        output: Output,
    },
    /// Response vector to connecting matrix and its singular values.
    Connect {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Admissibility verdict for a response vector.
    Check {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Moments to response vector.
    M2r {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Response vector to moments.
    R2m {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Moments to measure.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "takagi")]
        backend: BackendArg,
        /// Reject degenerate input instead of reducing the depth.
        #[arg(long)]
        strict: bool,
        /// Also write the full solve report here.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Moment residuals of a measure.
    Verify {
        #[arg(long, value_name = "PATH")]
        measure: PathBuf,
        #[arg(long, value_name = "PATH")]
        moments: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Moments to Jacobi coefficients.
    Recover {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Moments of nested truncations.
    Scan {
        #[command(flatten)]
        source: Source,
        /// Increasing sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, value_enum, default_value = "takagi")]
        backend: BackendArg,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Rejected(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Rejected(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Rejected(m) => m,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_numerical() {
            Failure::Rejected(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type CliResult = Result<(), Failure>;

/// Runs the tool on `argv` (including the program name) and returns the
/// exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.code()
        }
    }
}

fn meta(cli: &Cli) -> Meta {
    Meta::new(Some(cli.tol_singular), Some(cli.tol_residual))
}

fn emit(output: &Output, text: &str) -> CliResult {
    match &output.out {
        Some(path) => write_text(path, text).map_err(invalid),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_doc(cli: &Cli, output: &Output, kind: Kind, payload: &impl serde::Serialize) -> CliResult {
    let doc = Document::new(kind, payload, meta(cli)).map_err(invalid)?;
    emit(output, &doc.to_json())
}

fn read_payload<T: serde::de::DeserializeOwned>(path: &Path, kind: Kind) -> Result<T, Failure> {
    Document::read(path).and_then(|d| d.payload_as(kind)).map_err(invalid)
}

fn seed() -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Invalid(format!("{SEED_VAR} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(rand::random()),
    }
}

fn demo_spec(n: usize) -> Result<JacobiSpec, Failure> {
    if n == 0 {
        return Err(Failure::Invalid("--demo needs N >= 1".into()));
    }
    Ok(testing::random_spec(&mut testing::rng(seed()?), n, false))
}

fn load_spec(source: &Source) -> Result<JacobiSpec, Failure> {
    match (source.demo, &source.input) {
        (Some(n), _) => demo_spec(n),
        (None, Some(path)) => {
            let spec: JacobiSpec = read_payload(path, Kind::Jacobi)?;
            crate::jacobi::validate(&spec).map_err(invalid)?;
            Ok(spec)
        }
        (None, None) => Err(Failure::Invalid("either --in or --demo is required".into())),
    }
}

fn load_moments(source: &Source) -> Result<MomentSequence, Failure> {
    match (source.demo, &source.input) {
        (Some(n), _) => {
            let spec = demo_spec(n)?;
            let r = response_vector(&spec, 2 * n - 1, ResponseMethod::Timestep).map_err(invalid)?;
            response_to_moments(&r).map_err(invalid)
        }
        (None, Some(path)) => {
            let s: MomentSequence = read_payload(path, Kind::Moments)?;
            if !s.s.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Failure::Invalid("moments must be finite".into()));
            }
            Ok(s)
        }
        (None, None) => Err(Failure::Invalid("either --in or --demo is required".into())),
    }
}

fn load_response(path: &Path) -> Result<ResponseVector, Failure> {
    let r: ResponseVector = read_payload(path, Kind::Response)?;
    if r.is_empty() {
        return Err(Failure::Invalid("response vector is empty".into()));
    }
    Ok(r)
}

fn backend(arg: BackendArg) -> Backend {
    match arg {
        BackendArg::Takagi => Backend::Takagi,
        BackendArg::Eigen => Backend::Eigen,
    }
}

fn solve_options(cli: &Cli, backend_arg: BackendArg) -> SolveOptions {
    SolveOptions {
        backend: backend(backend_arg),
        tol_singular: cli.tol_singular,
        tol_residual: cli.tol_residual,
        ..SolveOptions::default()
    }
}

fn default_size(r: &ResponseVector, size: Option<usize>) -> usize {
    size.unwrap_or(r.len().div_ceil(2))
}

fn admissibility_json(a: &Admissibility) -> Value {
    json!({
        "admissible": a.is_admissible(),
        "tol": a.tol,
        "first_failure": a.first_failure,
        "margin": a.margin(),
        "checks": a.checks.iter().map(|c| json!({
            "k": c.k,
            "size": c.size,
            "sigma_ratio": c.sigma_ratio,
        })).collect::<Vec<_>>(),
    })
}

fn matrix_json(m: &crate::linalg::CMatrix) -> Value {
    json!((0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<ComplexScalar>>())
        .collect::<Vec<_>>())
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Simulate {
            source,
            control,
            horizon,
            output,
        } => {
            let spec = load_spec(source)?;
            let f = match control {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(invalid)?;
                    Control::new(serde_json::from_str(&text).map_err(invalid)?)
                }
                None => Control::impulse(horizon.unwrap_or(2 * spec.len())),
            };
            let horizon = horizon.unwrap_or(2 * spec.len());
            let field = simulate_finite(&spec, &f, spec.len(), horizon).map_err(invalid)?;
            emit(output, &wavefield_csv(&field))
        }
        Command::Response {
            source,
            len,
            method,
            backend: backend_arg,
            output,
        } => {
            let spec = load_spec(source)?;
            let len = len.unwrap_or(2 * spec.len() - 1);
            let r = match method {
                MethodArg::Timestep => response_vector(&spec, len, ResponseMethod::Timestep).map_err(invalid)?,
                MethodArg::Kernel => response_vector(&spec, len, ResponseMethod::Kernel).map_err(invalid)?,
                MethodArg::Spectral => {
                    let (m, _) = jacobi_measure(&spec, &solve_options(cli, *backend_arg))?;
                    spectral_response(&m, len)
                }
            };
            emit_doc(cli, output, Kind::Response, &r)
        }
        Command::Connect { input, size, output } => {
            let r = load_response(input)?;
            let size = default_size(&r, *size);
            let c = connecting_from_response(&r, size).map_err(invalid)?;
            let payload = json!({
                "size": size,
                "matrix": matrix_json(&c.entries),
                "singular_values": singular_values(&c.entries),
            });
            emit_doc(cli, output, Kind::Report, &payload)
        }
        Command::Check { input, size, output } => {
            let r = load_response(input)?;
            let size = default_size(&r, *size);
            let verdict = check_admissibility(&r, size, cli.tol_singular).map_err(invalid)?;
            emit_doc(cli, output, Kind::Report, &admissibility_json(&verdict))?;
            match verdict.failing_check() {
                Some(c) => Err(Failure::Rejected(format!(
                    "C^{} singular (k={}): sigma ratio {:e} <= tol {:e}",
                    c.size, c.k, c.sigma_ratio, cli.tol_singular
                ))),
                None => Ok(()),
            }
        }
        Command::M2r { input, output } => {
            let s: MomentSequence = read_payload(input, Kind::Moments)?;
            let r = moments_to_response(&s).map_err(invalid)?;
            emit_doc(cli, output, Kind::Response, &r)
        }
        Command::R2m { input, output } => {
            let r: ResponseVector = read_payload(input, Kind::Response)?;
            let s = response_to_moments(&r).map_err(invalid)?;
            emit_doc(cli, output, Kind::Moments, &s)
        }
        Command::Solve {
            source,
            backend: backend_arg,
            strict,
            report,
            output,
        } => {
            let s = load_moments(source)?;
            let opts = SolveOptions {
                degenerate: if *strict {
                    DegeneratePolicy::Reject
                } else {
                    DegeneratePolicy::Reduce
                },
                ..solve_options(cli, *backend_arg)
            };
            let rep = solve_truncated(&s, &opts)?;
            if let Some(path) = report {
                let payload = json!({
                    "backend": rep.backend.name(),
                    "moment_residuals": rep.moment_residuals,
                    "max_relative_residual": rep.max_relative_residual(&s),
                    "admissibility": admissibility_json(&rep.admissibility),
                    "reduced_to": rep.reduced_to,
                    "shift": rep.shift,
                    "recovery": recovery_json(&rep.recovery),
                });
                let doc = Document::new(Kind::Report, &payload, meta(cli)).map_err(invalid)?;
                write_text(path, &doc.to_json()).map_err(invalid)?;
            }
            emit_doc(cli, output, Kind::Measure, &rep.measure)
        }
        Command::Verify {
            measure,
            moments,
            output,
        } => {
            let m: DiscreteMeasure = read_payload(measure, Kind::Measure)?;
            if m.support.len() != m.weights.len() {
                return Err(Failure::Invalid("support and weights differ in length".into()));
            }
            let s: MomentSequence = read_payload(moments, Kind::Moments)?;
            let residuals = verify_measure(&m, &s);
            let worst = residuals
                .iter()
                .zip(&s.s)
                .map(|(r, sk)| r / sk.norm().max(1.0))
                .fold(0.0, f64::max);
            let payload = json!({
                "residuals": residuals,
                "max_relative_residual": worst,
                "tol": cli.tol_residual,
            });
            emit_doc(cli, output, Kind::Report, &payload)?;
            if worst > cli.tol_residual {
                return Err(Failure::Rejected(format!(
                    "moment residual {worst:e} exceeds tol {:e}",
                    cli.tol_residual
                )));
            }
            Ok(())
        }
        Command::Recover { source, depth, output } => {
            let s = load_moments(source)?;
            let depth = depth.unwrap_or(s.len().div_ceil(2));
            let opts = RecoveryOptions {
                tol: cli.tol_singular,
                ..RecoveryOptions::default()
            };
            let rec = recover_coefficients(&s, depth, &opts)?;
            emit_doc(cli, output, Kind::Report, &recovery_json(&rec))
        }
        Command::Scan {
            source,
            sizes,
            backend: backend_arg,
            output,
        } => {
            let spec = load_spec(source)?;
            let rep = convergence_scan(&spec, sizes, &solve_options(cli, *backend_arg))?;
            let payload = json!({
                "shared_order": rep.shared_order,
                "max_deviation": rep.max_deviation,
                "stable": rep.is_stable(cli.tol_residual),
                "entries": rep.entries.iter().map(|e| json!({
                    "n": e.n,
                    "measure": e.measure,
                    "moments": e.moments,
                })).collect::<Vec<_>>(),
            });
            emit_doc(cli, output, Kind::Report, &payload)
        }
    }
}

fn recovery_json(rec: &crate::pipeline::RecoveryResult) -> Value {
    json!({
        "a0": rec.a0,
        "a_squared": rec.a_squared,
        "a_principal": rec.a_principal,
        "b": rec.b,
        "b_last_free": rec.b_last_free,
        "condition": rec.condition_report.iter().map(|c| json!({
            "k": c.k,
            "sigma_min": c.sigma_min,
            "sigma_max": c.sigma_max,
        })).collect::<Vec<_>>(),
        "warnings": rec.warnings.iter().map(|w| match w {
            RecoveryWarning::IllConditioned { k, ratio } => format!("ill-conditioned Hankel minor S^{k}: sigma ratio {ratio:e}"),
        }).collect::<Vec<_>>(),
    })
}
