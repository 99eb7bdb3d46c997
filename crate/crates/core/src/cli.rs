//! The `qgt` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{resolve_absolute_values, wedge_vars, IntegrationError};
use crate::perturbation::{PerturbationError, DEFAULT_MAX_ORDER};
use crate::qgt::{
    compute_qgt, determinant_and_critical, CriticalCoupling, ModelKind, Parameter, ParameterSpace, QgtError,
    QgtOptions, QgtResult, SeriesMatrix, CURVATURE_CONVENTION, FIDELITY_CONVENTION,
};
use crate::scalar::ScalarSeries;
use crate::spectral::{numeric_qim, Estimator, NumericQgt, OracleConfig, OracleError, ParameterPoint};
use crate::verify::{run_suite, Suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGENT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("divergence: {0}")]
    Divergent(String),
    #[error("verification failed: {0} check(s) did not pass")]
    VerificationFailed(usize),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io { .. } => EXIT_INVALID,
            CliError::Divergent(_) => EXIT_DIVERGENT,
            CliError::VerificationFailed(_) => EXIT_VERIFY_FAILED,
        }
    }
}

impl From<QgtError> for CliError {
    fn from(e: QgtError) -> Self {
        match e {
            QgtError::Integration(IntegrationError::DivergentIntegral { .. }) => CliError::Divergent(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NoConvergence { .. } => CliError::Divergent(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qgt", version, about = "Quantum geometric tensor of anharmonic oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print intermediate integrands and chamber decompositions to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symbolic tensor components, optionally evaluated at a point.
    Compute(ComputeArgs),
    /// Run the built-in consistency suites.
    Verify(VerifyArgs),
    /// Export the integrand terms of one component as DOT graphs.
    Diagrams(DiagramArgs),
    /// Compare series and oracle over a parameter grid, as CSV.
    Sweep(SweepArgs),
    /// Numerical metric from exact diagonalisation at one point.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// linear, quartic or monomial:k
    #[arg(long, default_value = "quartic", value_parser = parse_model)]
    pub model: ModelKind,
    /// Perturbative order M.
    #[arg(long, default_value_t = 1)]
    pub order: u32,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleFlags {
    #[arg(long, default_value_t = 128)]
    pub basis_size: usize,
    /// Relative finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
}

impl OracleFlags {
    fn config(&self) -> OracleConfig {
        OracleConfig { basis_size: self.basis_size, fd_scale: self.fd_step, ..OracleConfig::default() }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// linear, quartic or all
    #[arg(default_value = "all", value_parser = parse_suite)]
    pub which: Suite,
    #[command(flatten)]
    pub oracle: OracleFlags,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Double one operator prefactor before checking.
    #[arg(long, hide = true, value_parser = parse_parameter)]
    pub inject_fault: Option<Parameter>,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Component as `a,b`, e.g. alpha,lambda.
    #[arg(long, default_value = "alpha,alpha")]
    pub component: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated α values.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    /// Comma-separated λ values.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub lambda: String,
    /// Comma-separated J values.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub j: String,
    #[command(flatten)]
    pub oracle: OracleFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "quartic", value_parser = parse_model)]
    pub model: ModelKind,
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub oracle: OracleFlags,
    /// Use the fidelity estimator instead of eigenvector derivatives.
    #[arg(long)]
    pub fidelity: bool,
    /// Also solve at twice the basis size and report the drift.
    #[arg(long)]
    pub check_basis: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_parameter(s: &str) -> Result<Parameter, String> {
    s.parse()
}

/// Reads `QGT_MAX_ORDER`, defaulting when unset.
pub fn max_order_from_env(value: Option<String>) -> Result<u32, CliError> {
    match value {
        None => Ok(DEFAULT_MAX_ORDER),
        Some(v) => v
            .trim()
            .parse::<u32>()
            .map_err(|_| CliError::Invalid(format!("QGT_MAX_ORDER must be a non-negative integer, got `{v}`"))),
    }
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("--{name} must be finite")))
    }
}

fn positive_alpha(v: f64) -> Result<f64, CliError> {
    if finite("alpha", v)? > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Invalid(format!("--alpha must be positive, got {v}")))
    }
}

fn check_order(order: u32, max: u32) -> Result<(), CliError> {
    if order > max {
        return Err(CliError::Invalid(PerturbationError::OrderOverflow { requested: order, max }.to_string()));
    }
    Ok(())
}

fn point_for(model: ModelKind, p: &PointArgs) -> Result<Option<ParameterPoint>, CliError> {
    if model == ModelKind::LinearSource && p.lambda.is_some_and(|l| l != 0.0) {
        return Err(CliError::Invalid("the linear model has no coupling; drop --lambda".into()));
    }
    if model != ModelKind::LinearSource && p.j.is_some_and(|j| j != 0.0) {
        return Err(CliError::Invalid(format!("model {model} has no source; drop --j")));
    }
    let Some(alpha) = p.alpha else {
        if p.lambda.is_some() || p.j.is_some() {
            return Err(CliError::Invalid("numeric evaluation needs --alpha".into()));
        }
        return Ok(None);
    };
    Ok(Some(ParameterPoint {
        alpha: positive_alpha(alpha)?,
        lambda: finite("lambda", p.lambda.unwrap_or(0.0))?,
        j: finite("j", p.j.unwrap_or(0.0))?,
    }))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), source: e }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
    }
}

#[derive(Debug, Serialize)]
pub struct TermJson {
    pub num: String,
    pub den: String,
    pub alpha_half_pow: i32,
    pub lambda_pow: u32,
    pub j_pow: u32,
}

#[derive(Debug, Serialize)]
pub struct SeriesJson {
    pub text: String,
    pub series: Vec<TermJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric_value: Option<f64>,
}

impl SeriesJson {
    pub fn new(s: &ScalarSeries, point: Option<ParameterPoint>) -> Self {
        SeriesJson {
            text: s.to_string(),
            series: s
                .terms()
                .map(|t| TermJson {
                    num: t.coeff.numer().to_string(),
                    den: t.coeff.denom().to_string(),
                    alpha_half_pow: t.alpha_half_pow,
                    lambda_pow: t.lambda_pow,
                    j_pow: t.j_pow,
                })
                .collect(),
            numeric_value: point.and_then(|p| s.eval(p.alpha, p.lambda, p.j).ok()).map(|v| v + 0.0),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ComponentJson {
    pub a: Parameter,
    pub b: Parameter,
    #[serde(flatten)]
    pub value: SeriesJson,
}

#[derive(Debug, Serialize)]
pub struct CriticalJson {
    pub kind: &'static str,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    pub alpha_half_pow: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric_value: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConventionJson {
    pub fidelity: &'static str,
    pub curvature: &'static str,
    pub truncation_order: u32,
}

#[derive(Debug, Serialize)]
pub struct ComputeRecord {
    pub schema: &'static str,
    pub model: String,
    pub order: u32,
    pub labels: Vec<Parameter>,
    pub point: Option<ParameterPoint>,
    pub convention: ConventionJson,
    pub components: Vec<ComponentJson>,
    pub metric: Vec<ComponentJson>,
    pub curvature: Vec<ComponentJson>,
    pub determinant: Option<SeriesJson>,
    pub critical_coupling: Option<CriticalJson>,
}

pub const COMPUTE_SCHEMA: &str = "qgt.compute.v1";

fn matrix_json(m: &SeriesMatrix, point: Option<ParameterPoint>) -> Vec<ComponentJson> {
    let mut out = Vec::new();
    for (i, a) in m.labels.iter().enumerate() {
        for (j, b) in m.labels.iter().enumerate() {
            out.push(ComponentJson { a: *a, b: *b, value: SeriesJson::new(&m.entries[i][j], point) });
        }
    }
    out
}

pub fn compute_record(result: &QgtResult, point: Option<ParameterPoint>) -> Result<ComputeRecord, CliError> {
    let (determinant, critical) = if result.metric.labels.len() == 2 {
        let rep = determinant_and_critical(&result.metric, result.order)?;
        let crit = rep.critical_coupling.map(|c| {
            let numeric_value = point.and_then(|p| c.eval(p.alpha).ok());
            match &c {
                CriticalCoupling::Exact(s) => CriticalJson {
                    kind: "exact",
                    text: c.to_string(),
                    series: Some(SeriesJson::new(s, None)),
                    coefficient: None,
                    alpha_half_pow: s.terms().next().map_or(0, |t| t.alpha_half_pow),
                    numeric_value,
                },
                CriticalCoupling::Approximate { coefficient, alpha_half_pow } => CriticalJson {
                    kind: "approximate",
                    text: c.to_string(),
                    series: None,
                    coefficient: Some(*coefficient),
                    alpha_half_pow: *alpha_half_pow,
                    numeric_value,
                },
            }
        });
        (Some(SeriesJson::new(&rep.determinant, point)), crit)
    } else {
        (None, None)
    };
    Ok(ComputeRecord {
        schema: COMPUTE_SCHEMA,
        model: result.model.to_string(),
        order: result.order,
        labels: result.metric.labels.clone(),
        point,
        convention: ConventionJson {
            fidelity: FIDELITY_CONVENTION,
            curvature: CURVATURE_CONVENTION,
            truncation_order: result.order,
        },
        components: matrix_json(&result.components, point),
        metric: matrix_json(&result.metric, point),
        curvature: matrix_json(&result.curvature, point),
        determinant,
        critical_coupling: critical,
    })
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

fn render_compute(rec: &ComputeRecord, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(rec).expect("serializable record") + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            for c in rec.metric.iter().filter(|c| c.a <= c.b) {
                rows.push(vec![format!("G[{},{}]", c.a, c.b), c.value.text.clone(), fmt_opt(c.value.numeric_value)]);
            }
            if let Some(d) = &rec.determinant {
                rows.push(vec!["det".into(), d.text.clone(), fmt_opt(d.numeric_value)]);
            }
            if let Some(c) = &rec.critical_coupling {
                rows.push(vec!["lambda_c".into(), c.text.clone(), fmt_opt(c.numeric_value)]);
            }
            csv_text(&["quantity", "series", "value"], &rows)
        }
        Format::Text => {
            let mut s = format!("model {}  order {}  ({})\n", rec.model, rec.order, rec.convention.fidelity);
            let mut line = |name: String, v: &SeriesJson| {
                s += &format!("{name:<16} = {}", v.text);
                if let Some(x) = v.numeric_value {
                    s += &format!("    [{x:.12e}]");
                }
                s.push('\n');
            };
            for c in rec.metric.iter().filter(|c| c.a <= c.b) {
                line(format!("G[{},{}]", c.a, c.b), &c.value);
            }
            if let Some(d) = &rec.determinant {
                line("det".into(), d);
            }
            if let Some(c) = &rec.critical_coupling {
                s += &format!("{:<16} = {} ({})", "lambda_c", c.text, c.kind);
                if let Some(x) = c.numeric_value {
                    s += &format!("    [{x:.12e}]");
                }
                s.push('\n');
            }
            s
        }
    }
}

fn cmd_compute(args: &ComputeArgs, max: u32, verbose: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    check_order(args.model.order, max)?;
    let point = point_for(args.model.model, &args.point)?;
    let space = ParameterSpace::default_for(args.model.model);
    let opts = QgtOptions { max_order: max, ..QgtOptions::new(args.model.order) };
    if verbose {
        for a in space.labels() {
            for b in space.labels() {
                let integrand = space.integrand_with_max(*a, *b, opts.order, max)?;
                let _ = writeln!(stderr, "integrand ({a},{b}):");
                for (p, c) in integrand.terms() {
                    let pieces = resolve_absolute_values(p, &wedge_vars(p));
                    let _ = writeln!(stderr, "  {c} * {p}    [{} chamber terms]", pieces.len());
                    for t in pieces {
                        let _ = writeln!(stderr, "      {t}");
                    }
                }
            }
        }
    }
    let result = compute_qgt(&space, &opts)?;
    let rec = compute_record(&result, point)?;
    emit(&args.output.out, &render_compute(&rec, args.output.format), stdout)
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let opts = VerifyOptions { oracle: args.oracle.config(), fault: args.inject_fault };
    opts.oracle.validate()?;
    let checks = run_suite(args.which, &opts);
    let failed = checks.iter().filter(|c| !c.passed).count();
    let text = match args.output.format {
        Format::Json => serde_json::to_string_pretty(&checks).expect("serializable checks") + "\n",
        Format::Csv => {
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        if c.passed { "PASS" } else { "FAIL" }.to_string(),
                        c.suite.to_string(),
                        c.name.to_string(),
                        c.component.clone(),
                        format!("{:e}", c.delta),
                        format!("{:e}", c.tolerance),
                        c.detail.clone(),
                    ]
                })
                .collect();
            csv_text(&["status", "suite", "check", "component", "delta", "tolerance", "detail"], &rows)
        }
        Format::Text => {
            let mut s = String::new();
            for c in &checks {
                s += &format!(
                    "{} {:<8} {:<26} {:<28} delta={:.3e} tol={:.1e}  {}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.component,
                    c.delta,
                    c.tolerance,
                    c.detail
                );
            }
            let max_sym = checks.iter().filter(|c| c.name == "symbolic-exact").map(|c| c.delta).fold(0.0, f64::max);
            s += &format!(
                "{}: {} of {} checks passed, max symbolic delta {}\n",
                if failed == 0 { "PASS" } else { "FAIL" },
                checks.len() - failed,
                checks.len(),
                max_sym
            );
            s
        }
    };
    emit(&args.output.out, &text, stdout)?;
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(())
}

fn parse_component(s: &str) -> Result<(Parameter, Parameter), CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse().map_err(CliError::Invalid)?, b.parse().map_err(CliError::Invalid)?)),
        _ => Err(CliError::Invalid(format!("component must look like `alpha,lambda`, got `{s}`"))),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Writes one DOT file per term of the `λ^M` part of the integrand.
pub fn write_diagrams(model: ModelKind, a: Parameter, b: Parameter, order: u32, max: u32, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let space = ParameterSpace::new(model, model.default_labels())?;
    let integrand = space.integrand_with_max(a, b, order, max)?;
    let part = if model == ModelKind::LinearSource { integrand } else { integrand.lambda_part(order) };
    // pairing counts undo the 1/M! (1/k!)^M vertex weights
    let undo = match model.potential().and_then(|p| p.as_monomial().map(|(k, _)| k)) {
        Some(k) => factorial(order) * factorial(k).powi(order as i32),
        None => 1.0,
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?;
    let mut files = Vec::new();
    for (i, (pattern, coeff)) in part.terms().enumerate() {
        let name = format!("{a}_{b}_order{order}_term{:02}", i + 1);
        let mult: f64 = coeff.terms().map(|t| crate::scalar::rational_to_f64(&t.coeff)).sum::<f64>().abs() * undo;
        let label = format!("{coeff} * {pattern}\\nmultiplicity {}", mult.round());
        let path = dir.join(format!("{name}.dot"));
        fs::write(&path, pattern.to_dot(&name, &label))
            .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        files.push(path);
    }
    Ok(files)
}

fn cmd_diagrams(args: &DiagramArgs, max: u32, stdout: &mut dyn Write) -> Result<(), CliError> {
    check_order(args.model.order, max)?;
    let (a, b) = parse_component(&args.component)?;
    let files = write_diagrams(args.model.model, a, b, args.model.order, max, &args.out)?;
    let mut text = String::new();
    for f in &files {
        text += &format!("{}\n", f.display());
    }
    emit(&None, &text, stdout)
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Invalid(format!("--{name}: `{x}` is not a number")))
                .and_then(|v| finite(name, v))
        })
        .collect()
}

/// CSV comparing series and oracle on the grid α × λ × J, in that nesting order.
pub fn sweep_csv(model: ModelKind, order: u32, max: u32, grid: [&[f64]; 3], config: &OracleConfig) -> Result<String, CliError> {
    check_order(order, max)?;
    config.validate()?;
    let space = ParameterSpace::default_for(model);
    let labels = space.labels().to_vec();
    let result = compute_qgt(&space, &QgtOptions { max_order: max, ..QgtOptions::new(order) })?;
    let pairs: Vec<(usize, usize)> = (0..labels.len()).flat_map(|i| (i..labels.len()).map(move |j| (i, j))).collect();

    let mut header = vec!["model".to_string(), "order".into(), "alpha".into(), "lambda".into(), "j".into()];
    for (i, j) in &pairs {
        let tag = format!("g_{}_{}", labels[*i], labels[*j]);
        for suffix in ["series", "oracle", "oracle_error", "deviation"] {
            header.push(format!("{tag}_{suffix}"));
        }
    }
    let mut points = Vec::new();
    for &alpha in grid[0] {
        for &lambda in grid[1] {
            for &j in grid[2] {
                points.push(point_for(
                    model,
                    &PointArgs { alpha: Some(alpha), lambda: Some(lambda), j: Some(j) },
                )?
                .expect("alpha given"));
            }
        }
    }
    let potential = model.potential();
    let rows: Vec<Result<Vec<String>, CliError>> = points
        .par_iter()
        .map(|p| {
            let sym = result.metric.eval(p.alpha, p.lambda, p.j).map_err(|e| CliError::Invalid(e.to_string()))?;
            let num: NumericQgt = numeric_qim(*p, potential.as_ref(), &labels, config)?;
            let mut row = vec![model.to_string(), order.to_string(), p.alpha.to_string(), p.lambda.to_string(), p.j.to_string()];
            for (i, j) in &pairs {
                let (s, n) = (sym[*i][*j], num.metric[*i][*j]);
                let err = num.error(labels[*i], labels[*j]).unwrap_or(f64::NAN);
                row.extend([format!("{s:e}"), format!("{n:e}"), format!("{err:e}"), format!("{:e}", n - s)]);
            }
            Ok(row)
        })
        .collect();
    let rows: Vec<Vec<String>> = rows.into_iter().collect::<Result<_, _>>()?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(csv_text(&header, &rows))
}

fn cmd_sweep(args: &SweepArgs, max: u32, stdout: &mut dyn Write) -> Result<(), CliError> {
    let alphas = parse_list("alpha", &args.alpha)?;
    for a in &alphas {
        positive_alpha(*a)?;
    }
    let lambdas = parse_list("lambda", &args.lambda)?;
    let js = parse_list("j", &args.j)?;
    let csv = sweep_csv(args.model.model, args.model.order, max, [&alphas, &lambdas, &js], &args.oracle.config())?;
    emit(&args.out, &csv, stdout)
}

#[derive(Debug, Serialize)]
struct OracleRecord<'a> {
    model: String,
    point: ParameterPoint,
    basis_size: usize,
    #[serde(flatten)]
    result: &'a NumericQgt,
}

fn cmd_oracle(args: &OracleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let point = point_for(args.model, &args.point)?.unwrap_or(ParameterPoint { alpha: 1.0, lambda: 0.0, j: 0.0 });
    let config = OracleConfig {
        estimator: if args.fidelity { Estimator::Fidelity } else { Estimator::Derivative },
        check_basis: args.check_basis,
        ..args.oracle.config()
    };
    let labels = args.model.default_labels();
    let potential = args.model.potential();
    let res = numeric_qim(point, potential.as_ref(), &labels, &config)?;
    let text = match args.output.format {
        Format::Json => {
            let rec = OracleRecord { model: args.model.to_string(), point, basis_size: config.basis_size, result: &res };
            serde_json::to_string_pretty(&rec).expect("serializable record") + "\n"
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (i, a) in labels.iter().enumerate() {
                for (j, b) in labels.iter().enumerate().skip(i) {
                    rows.push(vec![
                        a.to_string(),
                        b.to_string(),
                        format!("{:e}", res.metric[i][j]),
                        format!("{:e}", res.error(*a, *b).unwrap_or(f64::NAN)),
                    ]);
                }
            }
            csv_text(&["a", "b", "value", "error"], &rows)
        }
        Format::Text => {
            let mut s = format!(
                "model {} at alpha={} lambda={} j={}  (N={}, E0={:.12})\n",
                args.model, point.alpha, point.lambda, point.j, config.basis_size, res.ground_energy
            );
            for (i, a) in labels.iter().enumerate() {
                for (j, b) in labels.iter().enumerate().skip(i) {
                    s += &format!(
                        "g[{a},{b}] = {:.12e}  +- {:.1e}\n",
                        res.metric[i][j],
                        res.error(*a, *b).unwrap_or(f64::NAN)
                    );
                }
            }
            s
        }
    };
    emit(&args.output.out, &text, stdout)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, max_order_env: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = max_order_from_env(max_order_env).and_then(|max| match &cli.command {
        Command::Compute(a) => cmd_compute(a, max, cli.verbose, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Diagrams(a) => cmd_diagrams(a, max, stdout),
        Command::Sweep(a) => cmd_sweep(a, max, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "qgt: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&cli, std::env::var("QGT_MAX_ORDER").ok(), &mut std::io::stdout(), &mut std::io::stderr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str], env: Option<&str>) -> (i32, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("qgt").chain(args.iter().copied())).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&cli, env.map(String::from), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn env_cap() {
        assert_eq!(max_order_from_env(None).unwrap(), 2);
        assert_eq!(max_order_from_env(Some("4".into())).unwrap(), 4);
        assert!(max_order_from_env(Some("x".into())).is_err());
        let (code, _, err) = run_args(&["compute", "--order", "2"], Some("1"));
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("exceeds"));
    }

    #[test]
    fn validation_exit_codes() {
        assert_eq!(run_args(&["compute", "--alpha", "-1"], None).0, EXIT_INVALID);
        assert_eq!(run_args(&["compute", "--lambda", "0.1"], None).0, EXIT_INVALID);
        assert_eq!(run_args(&["compute", "--model", "linear", "--alpha", "1", "--lambda", "0.1"], None).0, EXIT_INVALID);
        assert_eq!(run_args(&["compute", "--alpha", "inf"], None).0, EXIT_INVALID);
    }

    #[test]
    fn divergence_maps_to_three() {
        let err: CliError = QgtError::Integration(IntegrationError::DivergentIntegral {
            var: crate::time::TimeVar::Tau1,
            bound: "-inf",
            reason: "test".into(),
        })
        .into();
        assert_eq!(err.exit_code(), EXIT_DIVERGENT);
    }

    #[test]
    fn free_compute_text() {
        let (code, out, _) = run_args(&["compute", "--order", "0", "--alpha", "1"], None);
        assert_eq!(code, 0);
        assert!(out.contains("G[alpha,alpha]   = 1/32 * a^-2"), "{out}");
        assert!(!out.contains(" l "), "{out}");
    }

    #[test]
    fn component_parsing() {
        assert_eq!(parse_component("alpha, lambda").unwrap(), (Parameter::Alpha, Parameter::Lambda));
        assert!(parse_component("alpha").is_err());
        assert!(parse_component("alpha,mu").is_err());
    }
}
