//! Self-checks comparing the symbolic pipeline with closed forms and the
//! spectral oracle.

use serde::Serialize;

use crate::linear_exact::{closed_form_series, exact_linear_qgt, overlap_derivative_checks};
use crate::perturbation::PolynomialPotential;
use crate::qgt::{compute_qgt, determinant_and_critical, CriticalCoupling, ModelKind, Parameter, ParameterSpace, QgtOptions, SeriesMatrix};
use crate::scalar::{rat, rational_to_f64, ScalarSeries};
use crate::spectral::{numeric_qim, OracleConfig, ParameterPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Linear,
    Quartic,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Suite::Linear),
            "quartic" => Ok(Suite::Quartic),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}` (expected linear, quartic or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub component: String,
    pub delta: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: &'static str, component: impl Into<String>, delta: f64, tolerance: f64) -> Self {
        Check { suite, name, component: component.into(), delta, tolerance, passed: delta <= tolerance, detail: String::new() }
    }

    fn failed(suite: &'static str, name: &'static str, component: impl Into<String>, detail: String) -> Self {
        Check {
            suite,
            name,
            component: component.into(),
            delta: f64::INFINITY,
            tolerance: 0.0,
            passed: false,
            detail,
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub oracle: OracleConfig,
    /// Doubles the symbolic prefactor of this parameter's operator, to
    /// exercise the failure path.
    pub fault: Option<Parameter>,
}

pub const FREE_ALPHAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const LINEAR_SOURCES: [f64; 2] = [0.0, 0.5];
pub const SLOPE_LAMBDAS: [f64; 3] = [0.02, 0.04, 0.08];

/// First-order quartic reference series keyed as `(α,α)`, `(α,λ)`, `(λ,λ)`,
/// then determinant and critical coupling.
pub fn quartic_reference() -> ([ScalarSeries; 3], ScalarSeries, ScalarSeries) {
    let m = |n, d, ahp, lp| ScalarSeries::monomial(rat(n, d), ahp, lp, 0);
    (
        [m(1, 32, -4, 0) + m(-11, 512, -7, 1), m(1, 128, -5, 0) + m(-89, 12288, -8, 1), m(13, 6144, -6, 0) + m(-31, 12288, -9, 1)],
        m(1, 196608, -10, 0) + m(-35, 3145728, -13, 1),
        m(16, 35, 3, 0),
    )
}

fn label(a: Parameter, b: Parameter) -> String {
    format!("G[{a},{b}]")
}

fn series_delta(got: &ScalarSeries, want: &ScalarSeries) -> f64 {
    let diff = got - want;
    diff.terms().map(|t| rational_to_f64(&t.coeff).abs()).fold(0.0, f64::max)
}

fn apply_fault(m: &mut SeriesMatrix, fault: Option<Parameter>) {
    let Some(p) = fault else { return };
    let two = rat(2, 1);
    for i in 0..m.labels.len() {
        for j in 0..m.labels.len() {
            for hit in [m.labels[i] == p, m.labels[j] == p] {
                if hit {
                    m.entries[i][j] = m.entries[i][j].scale(&two);
                }
            }
        }
    }
}

fn symbolic(model: ModelKind, order: u32, fault: Option<Parameter>) -> Result<SeriesMatrix, String> {
    let r = compute_qgt(&ParameterSpace::default_for(model), &QgtOptions::new(order)).map_err(|e| e.to_string())?;
    let mut m = r.metric;
    apply_fault(&mut m, fault);
    Ok(m)
}

fn oracle_vs_symbolic(
    suite: &'static str,
    name: &'static str,
    sym: &SeriesMatrix,
    point: ParameterPoint,
    potential: Option<&PolynomialPotential>,
    config: &OracleConfig,
    tol: f64,
    out: &mut Vec<Check>,
) {
    let at = format!("alpha={} lambda={} j={}", point.alpha, point.lambda, point.j);
    let numeric = match numeric_qim(point, potential, &sym.labels, config) {
        Ok(n) => n,
        Err(e) => return out.push(Check::failed(suite, name, at, e.to_string())),
    };
    let values = match sym.eval(point.alpha, point.lambda, point.j) {
        Ok(v) => v,
        Err(e) => return out.push(Check::failed(suite, name, at, e.to_string())),
    };
    let scale = (0..values.len()).map(|i| values[i][i].abs()).fold(0.0f64, f64::max);
    for (i, a) in sym.labels.iter().enumerate() {
        for (j, b) in sym.labels.iter().enumerate().skip(i) {
            let s = values[i][j];
            let n = numeric.metric[i][j];
            let rel = (n - s).abs() / s.abs().max(1e-3 * scale);
            out.push(
                Check::new(suite, name, label(*a, *b), rel, tol)
                    .with_detail(format!("{at} symbolic={s:.12e} oracle={n:.12e}")),
            );
        }
    }
}

pub fn linear_suite(opts: &VerifyOptions) -> Vec<Check> {
    const S: &str = "linear";
    let mut out = Vec::new();
    let sym = match symbolic(ModelKind::LinearSource, 0, opts.fault) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed(S, "symbolic-exact", "all", e)],
    };
    let want = closed_form_series();
    for (i, a) in sym.labels.iter().enumerate() {
        for (j, b) in sym.labels.iter().enumerate().skip(i) {
            let got = &sym.entries[i][j];
            let d = series_delta(got, &want[i][j]);
            let mut c = Check::new(S, "symbolic-exact", label(*a, *b), d, 0.0).with_detail(format!("{got}"));
            c.passed = *got == want[i][j];
            out.push(c);
        }
    }
    for &alpha in &FREE_ALPHAS {
        for &j in &LINEAR_SOURCES {
            let at = format!("alpha={alpha} j={j}");
            match overlap_derivative_checks(alpha, j, 1e-5) {
                Ok(r) => out.push(
                    Check::new(S, "wavefunction-closed-form", at, r.max_relative_deviation, 1e-6)
                        .with_detail(format!("norm={:.15}", r.norm)),
                ),
                Err(e) => out.push(Check::failed(S, "wavefunction-closed-form", at, e.to_string())),
            }
            if let Ok(exact) = exact_linear_qgt(alpha, j) {
                let m = exact.matrix();
                let v = sym.eval(alpha, 0.0, j).unwrap_or_default();
                let d = (0..2)
                    .flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| v.get(a).and_then(|r| r.get(b)).map_or(f64::INFINITY, |x| (x - m[a][b]).abs()))
                    .fold(0.0, f64::max);
                out.push(Check::new(S, "symbolic-closed-form", format!("alpha={alpha} j={j}"), d, 1e-12));
            }
            let point = ParameterPoint { alpha, lambda: 0.0, j };
            oracle_vs_symbolic(S, "oracle-symbolic", &sym, point, None, &opts.oracle, 1e-6, &mut out);
        }
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn quartic_suite(opts: &VerifyOptions) -> Vec<Check> {
    const S: &str = "quartic";
    let mut out = Vec::new();
    let sym = match symbolic(ModelKind::Quartic, 1, opts.fault) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed(S, "symbolic-exact", "all", e)],
    };
    let (want, want_det, want_crit) = quartic_reference();
    let pairs = [(Parameter::Alpha, Parameter::Alpha), (Parameter::Alpha, Parameter::Lambda), (Parameter::Lambda, Parameter::Lambda)];
    for ((a, b), w) in pairs.iter().zip(&want) {
        let got = sym.get(*a, *b).cloned().unwrap_or_default();
        let mut c = Check::new(S, "symbolic-exact", label(*a, *b), series_delta(&got, w), 0.0).with_detail(format!("{got}"));
        c.passed = got == *w;
        out.push(c);
    }
    match determinant_and_critical(&sym, 1) {
        Ok(rep) => {
            let mut c = Check::new(S, "symbolic-exact", "det", series_delta(&rep.determinant, &want_det), 0.0)
                .with_detail(format!("{}", rep.determinant));
            c.passed = rep.determinant == want_det;
            out.push(c);
            let ok = rep.critical_coupling == Some(CriticalCoupling::Exact(want_crit.clone()));
            let mut c = Check::new(S, "symbolic-exact", "lambda_c", if ok { 0.0 } else { f64::INFINITY }, 0.0);
            c.detail = rep.critical_coupling.map_or("none".into(), |x| x.to_string());
            out.push(c);
        }
        Err(e) => out.push(Check::failed(S, "symbolic-exact", "det", e.to_string())),
    }

    let quartic = PolynomialPotential::quartic();
    for &alpha in &FREE_ALPHAS {
        let point = ParameterPoint { alpha, lambda: 0.0, j: 0.0 };
        oracle_vs_symbolic(S, "oracle-free", &sym, point, Some(&quartic), &opts.oracle, 1e-6, &mut out);
    }

    let mut devs = vec![Vec::new(); 3];
    for &lambda in &SLOPE_LAMBDAS {
        let point = ParameterPoint { alpha: 1.0, lambda, j: 0.0 };
        match numeric_qim(point, Some(&quartic), &sym.labels, &opts.oracle) {
            Ok(n) => {
                for (k, (a, b)) in pairs.iter().enumerate() {
                    let s = sym.get(*a, *b).and_then(|s| s.eval(1.0, lambda, 0.0).ok()).unwrap_or(f64::NAN);
                    devs[k].push(n.get(*a, *b).unwrap_or(f64::NAN) - s);
                }
            }
            Err(e) => out.push(Check::failed(S, "oracle-slope", format!("lambda={lambda}"), e.to_string())),
        }
    }
    if devs[0].len() == SLOPE_LAMBDAS.len() {
        for (k, (a, b)) in pairs.iter().enumerate() {
            let slope = log_log_slope(&SLOPE_LAMBDAS, &devs[k]);
            let d = if slope.is_finite() { (slope - 2.0).abs() } else { f64::INFINITY };
            out.push(
                Check::new(S, "oracle-slope", label(*a, *b), d, 0.3)
                    .with_detail(format!("slope={slope:.4} deviations={:?}", devs[k])),
            );
        }
    }

    let point = ParameterPoint { alpha: 1.0, lambda: 0.05, j: 0.0 };
    let ll = (Parameter::Lambda, Parameter::Lambda);
    match numeric_qim(point, Some(&quartic), &sym.labels, &opts.oracle) {
        Ok(n) => {
            let s = sym.get(ll.0, ll.1).and_then(|s| s.eval(1.0, 0.05, 0.0).ok()).unwrap_or(f64::NAN);
            let g = n.get(ll.0, ll.1).unwrap_or(f64::NAN);
            let d = (g - s).abs();
            out.push(
                Check::new(S, "oracle-first-order", label(ll.0, ll.1), if d.is_nan() { f64::INFINITY } else { d }, 5e-5)
                    .with_detail(format!("lambda=0.05 symbolic={s:.10e} oracle={g:.10e}")),
            );
        }
        Err(e) => out.push(Check::failed(S, "oracle-first-order", label(ll.0, ll.1), e.to_string())),
    }
    out
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Check> {
    match suite {
        Suite::Linear => linear_suite(opts),
        Suite::Quartic => quartic_suite(opts),
        Suite::All => {
            let mut v = linear_suite(opts);
            v.extend(quartic_suite(opts));
            v
        }
    }
}
