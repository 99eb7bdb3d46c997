//! Quantum geometric tensor components as exact series.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::integrator::{IntegrationError, Integrator};
use crate::perturbation::{
    connected_integrand, DeformationOperator, PerturbationError, PerturbativeExpansion, PolynomialPotential,
};
use crate::scalar::{rational_to_f64, Rational, ScalarError, ScalarSeries};
use crate::time::TimeVar;
use crate::wick::{connected_pair_correlator, GaussianModel, InsertionPoint, PropagatorSum};

pub use crate::perturbation::Parameter;

/// How the fidelity relates to the metric in reported results.
pub const FIDELITY_CONVENTION: &str = "F = 1 - (1/2) G_ab dp^a dp^b";
pub const CURVATURE_CONVENTION: &str = "F_ab = (G_ab - G_ba) / 2";

#[derive(Debug, Error)]
pub enum QgtError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("parameter `{0}` is not part of this model")]
    UnknownParameter(Parameter),
    #[error("determinant needs a two-parameter space, got {0}")]
    NotTwoDimensional(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LinearSource,
    Quartic,
    Monomial(u32),
}

impl ModelKind {
    pub fn potential(&self) -> Option<PolynomialPotential> {
        match self {
            ModelKind::LinearSource => None,
            ModelKind::Quartic => Some(PolynomialPotential::quartic()),
            ModelKind::Monomial(k) => Some(PolynomialPotential::monomial(*k)),
        }
    }

    pub fn default_labels(&self) -> Vec<Parameter> {
        match self {
            ModelKind::LinearSource => vec![Parameter::Alpha, Parameter::J],
            _ => vec![Parameter::Alpha, Parameter::Lambda],
        }
    }

    pub fn allows(&self, p: Parameter) -> bool {
        match p {
            Parameter::Alpha => true,
            Parameter::J => *self == ModelKind::LinearSource,
            Parameter::Lambda => *self != ModelKind::LinearSource,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::LinearSource => f.write_str("linear"),
            ModelKind::Quartic => f.write_str("quartic"),
            ModelKind::Monomial(k) => write!(f, "monomial:{k}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ModelKind::LinearSource),
            "quartic" => Ok(ModelKind::Quartic),
            _ => {
                let k = s
                    .strip_prefix("monomial:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| format!("unknown model `{s}` (expected linear, quartic or monomial:k)"))?;
                if k == 0 {
                    return Err("monomial degree must be at least 1".into());
                }
                Ok(ModelKind::Monomial(k))
            }
        }
    }
}

/// Model together with an ordered list of distinct parameter labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSpace {
    model: ModelKind,
    labels: Vec<Parameter>,
}

impl ParameterSpace {
    pub fn new(model: ModelKind, labels: Vec<Parameter>) -> Result<Self, QgtError> {
        if labels.is_empty() {
            return Err(QgtError::InvalidSpace("no parameters".into()));
        }
        for (i, p) in labels.iter().enumerate() {
            if labels[..i].contains(p) {
                return Err(QgtError::InvalidSpace(format!("duplicate parameter `{p}`")));
            }
            if !model.allows(*p) {
                return Err(QgtError::UnknownParameter(*p));
            }
        }
        Ok(ParameterSpace { model, labels })
    }

    pub fn default_for(model: ModelKind) -> Self {
        ParameterSpace { model, labels: model.default_labels() }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn labels(&self) -> &[Parameter] {
        &self.labels
    }

    pub fn operator(&self, p: Parameter) -> Result<DeformationOperator, QgtError> {
        if !self.labels.contains(&p) {
            return Err(QgtError::UnknownParameter(p));
        }
        match p {
            Parameter::Alpha => Ok(DeformationOperator::alpha()),
            Parameter::J => Ok(DeformationOperator::source()),
            Parameter::Lambda => {
                let pot = self.model.potential().ok_or(QgtError::UnknownParameter(p))?;
                Ok(DeformationOperator::coupling(&pot)?)
            }
        }
    }

    /// Connected integrand of `<O_a(t1) O_b(t2)>` without operator prefactors.
    pub fn integrand(&self, a: Parameter, b: Parameter, order: u32) -> Result<PropagatorSum, QgtError> {
        self.integrand_with_max(a, b, order, crate::perturbation::DEFAULT_MAX_ORDER)
    }

    pub fn integrand_with_max(&self, a: Parameter, b: Parameter, order: u32, max: u32) -> Result<PropagatorSum, QgtError> {
        let (oa, ob) = (self.operator(a)?, self.operator(b)?);
        match self.model.potential() {
            None => Ok(connected_pair_correlator(
                &GaussianModel::with_source(),
                &[InsertionPoint::new(TimeVar::Tau1, oa.q_power)],
                &[InsertionPoint::new(TimeVar::Tau2, ob.q_power)],
            )),
            Some(pot) => {
                let exp = PerturbativeExpansion::with_max_order(order, pot, max)?;
                Ok(connected_integrand(&oa, &ob, &exp))
            }
        }
    }
}

/// Options of a symbolic computation.
#[derive(Debug, Clone, Copy)]
pub struct QgtOptions {
    pub order: u32,
    pub max_order: u32,
    pub integrator: Integrator,
}

impl QgtOptions {
    pub fn new(order: u32) -> Self {
        QgtOptions { order, max_order: crate::perturbation::DEFAULT_MAX_ORDER, integrator: Integrator::new() }
    }
}

/// `G_ab` to order `λ^M`.
pub fn qgt_component(space: &ParameterSpace, a: Parameter, b: Parameter, opts: &QgtOptions) -> Result<ScalarSeries, QgtError> {
    let integrand = space.integrand_with_max(a, b, opts.order, opts.max_order)?;
    let pref = &space.operator(a)?.prefactor * &space.operator(b)?.prefactor;
    let value = opts.integrator.integrate_sum(&integrand)?.scale(&pref);
    Ok(value.truncate_lambda(opts.order))
}

/// Square matrix of series indexed by the space's labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    pub labels: Vec<Parameter>,
    pub entries: Vec<Vec<ScalarSeries>>,
}

impl SeriesMatrix {
    pub fn get(&self, a: Parameter, b: Parameter) -> Option<&ScalarSeries> {
        let i = self.labels.iter().position(|p| *p == a)?;
        let j = self.labels.iter().position(|p| *p == b)?;
        Some(&self.entries[i][j])
    }

    pub fn eval(&self, alpha: f64, lambda: f64, j: f64) -> Result<Vec<Vec<f64>>, ScalarError> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|s| s.eval(alpha, lambda, j)).collect())
            .collect()
    }

    fn map2(&self, f: impl Fn(&ScalarSeries, &ScalarSeries) -> ScalarSeries) -> SeriesMatrix {
        let n = self.labels.len();
        let entries = (0..n).map(|i| (0..n).map(|j| f(&self.entries[i][j], &self.entries[j][i])).collect()).collect();
        SeriesMatrix { labels: self.labels.clone(), entries }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QgtResult {
    pub model: ModelKind,
    pub order: u32,
    pub components: SeriesMatrix,
    pub metric: SeriesMatrix,
    pub curvature: SeriesMatrix,
}

impl QgtResult {
    pub fn fidelity_convention(&self) -> &'static str {
        FIDELITY_CONVENTION
    }

    pub fn curvature_convention(&self) -> &'static str {
        CURVATURE_CONVENTION
    }
}

/// All ordered components, then their symmetric and antisymmetric parts.
pub fn compute_qgt(space: &ParameterSpace, opts: &QgtOptions) -> Result<QgtResult, QgtError> {
    let labels = space.labels().to_vec();
    let pairs: Vec<(Parameter, Parameter)> =
        labels.iter().flat_map(|a| labels.iter().map(move |b| (*a, *b))).collect();
    let values: Vec<Result<ScalarSeries, QgtError>> =
        pairs.par_iter().map(|(a, b)| qgt_component(space, *a, *b, opts)).collect();
    let mut flat = Vec::with_capacity(values.len());
    for v in values {
        flat.push(v?);
    }
    let n = labels.len();
    let entries: Vec<Vec<ScalarSeries>> = flat.chunks(n).map(|c| c.to_vec()).collect();
    let components = SeriesMatrix { labels, entries };
    let half = Rational::new(1.into(), 2.into());
    let metric = components.map2(|x, y| (x + y).scale(&half));
    let curvature = components.map2(|x, y| (x - y).scale(&half));
    Ok(QgtResult { model: space.model(), order: opts.order, components, metric, curvature })
}

/// Root of the metric determinant in λ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CriticalCoupling {
    /// `λ_c` as an exact series in α.
    Exact(#[serde(skip)] ScalarSeries),
    /// `λ_c = coefficient · α^{alpha_half_pow/2}` with a floating coefficient.
    Approximate { coefficient: f64, alpha_half_pow: i32 },
}

impl CriticalCoupling {
    pub fn eval(&self, alpha: f64) -> Result<f64, ScalarError> {
        match self {
            CriticalCoupling::Exact(s) => s.eval(alpha, 0.0, 0.0),
            CriticalCoupling::Approximate { coefficient, alpha_half_pow } => {
                if alpha <= 0.0 {
                    return Err(ScalarError::NonPositiveAlpha(alpha));
                }
                Ok(coefficient * alpha.powf(*alpha_half_pow as f64 / 2.0))
            }
        }
    }
}

impl fmt::Display for CriticalCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalCoupling::Exact(s) => write!(f, "{s}"),
            CriticalCoupling::Approximate { coefficient, alpha_half_pow } => {
                write!(f, "{coefficient:.12} * a^{}", crate::scalar::half_power_string(*alpha_half_pow))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantReport {
    pub determinant: ScalarSeries,
    pub critical_coupling: Option<CriticalCoupling>,
    pub truncation_order: u32,
}

/// Determinant of a 2×2 metric truncated at `λ^order`, and the smallest
/// positive coupling where it vanishes, if the coefficients scale uniformly in α.
pub fn determinant_and_critical(metric: &SeriesMatrix, order: u32) -> Result<DeterminantReport, QgtError> {
    let n = metric.labels.len();
    if n != 2 {
        return Err(QgtError::NotTwoDimensional(n));
    }
    let e = &metric.entries;
    let det = e[0][0].mul_truncated(&e[1][1], order) - e[0][1].mul_truncated(&e[1][0], order);
    let critical = critical_coupling(&det);
    Ok(DeterminantReport { determinant: det, critical_coupling: critical, truncation_order: order })
}

fn critical_coupling(det: &ScalarSeries) -> Option<CriticalCoupling> {
    let top = det.max_lambda_pow()?;
    if top == 0 {
        return None;
    }
    // each λ^m coefficient must be a single α power with no J dependence
    let mut coeffs = Vec::new();
    let mut powers = Vec::new();
    for m in 0..=top {
        let part = det.lambda_coefficient(m);
        let terms: Vec<_> = part.terms().collect();
        match terms.as_slice() {
            [] => {
                coeffs.push(Rational::zero());
                powers.push(None);
            }
            [t] if t.j_pow == 0 => {
                coeffs.push(t.coeff.clone());
                powers.push(Some(t.alpha_half_pow));
            }
            _ => return None,
        }
    }
    let p0 = powers[0]?;
    let mut step = None;
    for (m, p) in powers.iter().enumerate().skip(1) {
        if let Some(p) = p {
            let diff = p0 - p;
            if diff % m as i32 != 0 {
                return None;
            }
            let s = diff / m as i32;
            if step.is_some_and(|x| x != s) {
                return None;
            }
            step = Some(s);
        }
    }
    let step = step?;
    if top == 1 {
        let root = -(&coeffs[0] / &coeffs[1]);
        if !root.is_positive() {
            return None;
        }
        return Some(CriticalCoupling::Exact(ScalarSeries::monomial(root, step, 0, 0)));
    }
    let c: Vec<f64> = coeffs.iter().map(rational_to_f64).collect();
    smallest_positive_root(&c).map(|x| CriticalCoupling::Approximate { coefficient: x, alpha_half_pow: step })
}

fn smallest_positive_root(c: &[f64]) -> Option<f64> {
    let lead = c.iter().rposition(|x| *x != 0.0)?;
    if lead == 0 {
        return None;
    }
    let bound = 1.0 + c[..lead].iter().map(|x| (x / c[lead]).abs()).fold(0.0, f64::max);
    let p = |x: f64| c.iter().rev().fold(0.0, |acc, ci| acc * x + ci);
    let samples = 20_000;
    let mut prev = (0.0, p(0.0));
    for i in 1..=samples {
        let x = bound * i as f64 / samples as f64;
        let v = p(x);
        if v == 0.0 {
            return Some(x);
        }
        if v.signum() != prev.1.signum() {
            let (mut lo, mut hi) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(mid).signum() == p(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = (x, v);
    }
    None
}

/// Exact series for several components keyed by label pair; used by reports.
pub fn component_map(result: &QgtResult) -> BTreeMap<(Parameter, Parameter), ScalarSeries> {
    let mut out = BTreeMap::new();
    for (i, a) in result.components.labels.iter().enumerate() {
        for (j, b) in result.components.labels.iter().enumerate() {
            out.insert((*a, *b), result.components.entries[i][j].clone());
        }
    }
    out
}
