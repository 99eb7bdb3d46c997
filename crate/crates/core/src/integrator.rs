//! Closed-form integration of propagator products over the wedge
//! `t1 in (-inf, 0]`, `t2 in [0, inf)` with interaction vertices on the full
//! axis.
//!
//! Each product is split into chambers (total orders of the time variables
//! and the constant 0) on which every `|x - y|` has a definite sign. On a
//! chamber the integrand is `c · Π x^k · exp(√α Σ r_x x)`, and iterated
//! integration stays inside that class, including the zero-rate case that
//! produces polynomial prefactors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{rat, rational_to_f64, Rational, ScalarSeries, ScalarTerm};
use crate::time::{Domain, TimeVar};
use crate::wick::{Pattern, PropagatorSum};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegrationError {
    #[error("integral over {var} diverges toward {bound}: {reason}")]
    DivergentIntegral { var: TimeVar, bound: &'static str, reason: String },
    #[error("variable {0} is not part of the integrand's chamber")]
    UnknownVariable(TimeVar),
    #[error("integration order leaves {0} unintegrated")]
    IncompleteOrder(TimeVar),
}

/// Value of the free propagator `e^{-√α|t1-t2|} / (2√α)`.
pub fn propagator_value(alpha: f64, t1: f64, t2: f64) -> f64 {
    let w = alpha.sqrt();
    (-w * (t1 - t2).abs()).exp() / (2.0 * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Var(TimeVar),
    Zero,
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Var(v) => write!(f, "{v}"),
            Point::Zero => f.write_str("0"),
        }
    }
}

/// Increasing order of the active time variables and 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chamber {
    pub ordering: Vec<Point>,
}

impl Chamber {
    fn position(&self, v: TimeVar) -> Option<usize> {
        self.ordering.iter().position(|p| *p == Point::Var(v))
    }

    fn without(&self, v: TimeVar) -> Chamber {
        Chamber { ordering: self.ordering.iter().copied().filter(|p| *p != Point::Var(v)).collect() }
    }

    /// Whether the sample point lies in this chamber (boundaries included).
    pub fn contains(&self, values: &BTreeMap<TimeVar, f64>) -> bool {
        let val = |p: &Point| match p {
            Point::Zero => Some(0.0),
            Point::Var(v) => values.get(v).copied(),
        };
        self.ordering.windows(2).all(|w| match (val(&w[0]), val(&w[1])) {
            (Some(a), Some(b)) => a <= b,
            _ => false,
        })
    }
}

impl fmt::Display for Chamber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ordering.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(" < "))
    }
}

/// `scalar · Π t^monomial[t] · exp(√α Σ rates[t]·t)`, valid on `chamber`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPolyTerm {
    pub scalar: ScalarTerm,
    pub monomial: BTreeMap<TimeVar, u32>,
    pub rates: BTreeMap<TimeVar, Rational>,
    pub chamber: Chamber,
}

impl ExpPolyTerm {
    /// Numeric value at `values` (the chamber is not checked).
    pub fn eval(&self, alpha: f64, values: &BTreeMap<TimeVar, f64>) -> f64 {
        let w = alpha.sqrt();
        let mut out = self.scalar.eval(alpha, 1.0, 1.0);
        for (v, k) in &self.monomial {
            out *= values[v].powi(*k as i32);
        }
        let exponent: f64 = self.rates.iter().map(|(v, r)| rational_to_f64(r) * values[v]).sum();
        out * (w * exponent).exp()
    }

    fn key(&self) -> TermKey {
        TermKey {
            chamber: self.chamber.clone(),
            monomial: self.monomial.iter().map(|(v, k)| (*v, *k)).collect(),
            rates: self.rates.iter().map(|(v, r)| (*v, r.clone())).collect(),
            alpha_half_pow: self.scalar.alpha_half_pow,
            lambda_pow: self.scalar.lambda_pow,
            j_pow: self.scalar.j_pow,
        }
    }
}

impl fmt::Display for ExpPolyTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.chamber, ScalarSeries::from(self.scalar.clone()))?;
        for (v, k) in &self.monomial {
            if *k == 1 {
                write!(f, " * {v}")?;
            } else {
                write!(f, " * {v}^{k}")?;
            }
        }
        if !self.rates.is_empty() {
            let parts: Vec<String> = self.rates.iter().map(|(v, r)| format!("{r}*{v}")).collect();
            write!(f, " * exp(sqrt(a)*({}))", parts.join(" + "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TermKey {
    chamber: Chamber,
    monomial: Vec<(TimeVar, u32)>,
    rates: Vec<(TimeVar, Rational)>,
    alpha_half_pow: i32,
    lambda_pow: u32,
    j_pow: u32,
}

fn merge_terms(terms: Vec<ExpPolyTerm>) -> Vec<ExpPolyTerm> {
    let mut index: HashMap<TermKey, usize> = HashMap::new();
    let mut out: Vec<ExpPolyTerm> = Vec::new();
    for t in terms {
        match index.get(&t.key()) {
            Some(&i) => out[i].scalar.coeff += t.scalar.coeff,
            None => {
                index.insert(t.key(), out.len());
                out.push(t);
            }
        }
    }
    out.retain(|t| !t.scalar.coeff.is_zero());
    out
}

fn chambers_for(vars: &[TimeVar]) -> Vec<Chamber> {
    let mut base = Vec::new();
    if vars.contains(&TimeVar::Tau1) {
        base.push(Point::Var(TimeVar::Tau1));
    }
    base.push(Point::Zero);
    if vars.contains(&TimeVar::Tau2) {
        base.push(Point::Var(TimeVar::Tau2));
    }
    let mut orders = vec![base];
    for v in vars.iter().filter(|v| v.domain() == Domain::FullAxis) {
        let mut next = Vec::new();
        for o in &orders {
            for pos in 0..=o.len() {
                let mut n = o.clone();
                n.insert(pos, Point::Var(*v));
                next.push(n);
            }
        }
        orders = next;
    }
    orders.into_iter().map(|ordering| Chamber { ordering }).collect()
}

/// Splits a propagator product over `vars` into one exponential term per
/// chamber. `vars` must contain every endpoint of the product; external
/// times keep their half-axis, so `|t2 - t1|` is always `t2 - t1`.
pub fn resolve_absolute_values(pattern: &Pattern, vars: &[TimeVar]) -> Vec<ExpPolyTerm> {
    let n_edges = pattern.edges().len() as i64;
    let scalar = ScalarTerm::new(
        Rational::new(BigInt::one(), BigInt::from(2).pow(n_edges as u32)),
        -(n_edges as i32),
        0,
        0,
    );
    chambers_for(vars)
        .into_iter()
        .map(|chamber| {
            let mut rates: BTreeMap<TimeVar, Rational> = BTreeMap::new();
            for &(a, b) in pattern.edges() {
                if a == b {
                    continue;
                }
                let (pa, pb) = (chamber.position(a).unwrap(), chamber.position(b).unwrap());
                let (lo, hi) = if pa < pb { (a, b) } else { (b, a) };
                *rates.entry(hi).or_insert_with(Rational::zero) -= Rational::one();
                *rates.entry(lo).or_insert_with(Rational::zero) += Rational::one();
            }
            rates.retain(|_, r| !r.is_zero());
            ExpPolyTerm { scalar: scalar.clone(), monomial: BTreeMap::new(), rates, chamber }
        })
        .collect()
}

/// Sign convention for the exponential rates: symbolic `√α` with `α > 0`, or
/// a non-decaying kernel (`α <= 0`) for which every infinite range diverges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayRegime {
    #[default]
    PositiveAlpha,
    NonDecaying,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Integrator {
    pub regime: DecayRegime,
}

fn pow_neg(r: &Rational, n: u32) -> Rational {
    let mut out = Rational::one();
    for _ in 0..n {
        out /= r;
    }
    out
}

impl Integrator {
    pub fn new() -> Self {
        Integrator::default()
    }

    /// Integrator for a concrete `α`; `α <= 0` has no decaying propagator.
    pub fn for_alpha(alpha: f64) -> Self {
        let regime = if alpha > 0.0 { DecayRegime::PositiveAlpha } else { DecayRegime::NonDecaying };
        Integrator { regime }
    }

    fn check_tail(&self, var: TimeVar, bound: &'static str, rate: &Rational) -> Result<(), IntegrationError> {
        let decays = match self.regime {
            DecayRegime::NonDecaying => false,
            DecayRegime::PositiveAlpha => {
                if bound == "+inf" {
                    rate.is_negative()
                } else {
                    rate.is_positive()
                }
            }
        };
        if decays {
            Ok(())
        } else {
            Err(IntegrationError::DivergentIntegral {
                var,
                bound,
                reason: format!("exponential rate {rate}·√α does not decay"),
            })
        }
    }

    /// Integrates `var` between its neighbours in the term's chamber.
    pub fn integrate_innermost(&self, term: &ExpPolyTerm, var: TimeVar) -> Result<Vec<ExpPolyTerm>, IntegrationError> {
        let pos = term.chamber.position(var).ok_or(IntegrationError::UnknownVariable(var))?;
        let lo = pos.checked_sub(1).map(|i| term.chamber.ordering[i]);
        let hi = term.chamber.ordering.get(pos + 1).copied();
        let k = term.monomial.get(&var).copied().unwrap_or(0);
        let rate = term.rates.get(&var).cloned().unwrap_or_else(Rational::zero);

        let mut rest = term.clone();
        rest.monomial.remove(&var);
        rest.rates.remove(&var);
        rest.chamber = term.chamber.without(var);

        // antiderivative pieces: (factor, alpha half power shift, power of t, sign)
        let mut pieces: Vec<(Rational, i32, u32)> = Vec::new();
        if rate.is_zero() {
            pieces.push((rat(1, i64::from(k) + 1), 0, k + 1));
        } else {
            let mut falling = Rational::one();
            for j in 0..=k {
                let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
                pieces.push((sign * &falling * pow_neg(&rate, j + 1), -(j as i32 + 1), k - j));
                falling *= Rational::from_integer(BigInt::from(k - j));
            }
        }

        let mut out = Vec::new();
        for (bound, sign) in [(hi, 1i64), (lo, -1i64)] {
            match bound {
                None => {
                    let label = if sign == 1 { "+inf" } else { "-inf" };
                    if rate.is_zero() {
                        return Err(IntegrationError::DivergentIntegral {
                            var,
                            bound: label,
                            reason: "integrand does not depend on the variable".into(),
                        });
                    }
                    self.check_tail(var, label, &rate)?;
                }
                Some(Point::Zero) => {
                    for (factor, shift, power) in &pieces {
                        if *power == 0 {
                            let mut t = rest.clone();
                            t.scalar.coeff = &t.scalar.coeff * factor * rat(sign, 1);
                            t.scalar.alpha_half_pow += shift;
                            out.push(t);
                        }
                    }
                }
                Some(Point::Var(u)) => {
                    for (factor, shift, power) in &pieces {
                        let mut t = rest.clone();
                        t.scalar.coeff = &t.scalar.coeff * factor * rat(sign, 1);
                        t.scalar.alpha_half_pow += shift;
                        if *power > 0 {
                            *t.monomial.entry(u).or_insert(0) += power;
                        }
                        let r = t.rates.entry(u).or_insert_with(Rational::zero);
                        *r += &rate;
                        if r.is_zero() {
                            t.rates.remove(&u);
                        }
                        out.push(t);
                    }
                }
            }
        }
        Ok(merge_terms(out))
    }

    /// Integrates the listed variables in order (first = innermost).
    pub fn integrate_all_in_order(
        &self,
        terms: Vec<ExpPolyTerm>,
        order: &[TimeVar],
    ) -> Result<ScalarSeries, IntegrationError> {
        let mut current = merge_terms(terms);
        for &v in order {
            let mut next = Vec::new();
            for t in &current {
                if t.chamber.position(v).is_none() {
                    return Err(IntegrationError::UnknownVariable(v));
                }
                next.extend(self.integrate_innermost(t, v)?);
            }
            current = merge_terms(next);
        }
        let mut out = ScalarSeries::zero();
        for t in current {
            if let Some(Point::Var(v)) = t.chamber.ordering.iter().find(|p| matches!(p, Point::Var(_))) {
                return Err(IntegrationError::IncompleteOrder(*v));
            }
            out += &ScalarSeries::from(t.scalar);
        }
        Ok(out)
    }

    /// Default order: interaction vertices innermost, then `t2`, then `t1`.
    pub fn integrate_all(&self, terms: Vec<ExpPolyTerm>) -> Result<ScalarSeries, IntegrationError> {
        let mut vars: Vec<TimeVar> = terms
            .iter()
            .flat_map(|t| t.chamber.ordering.iter())
            .filter_map(|p| match p {
                Point::Var(v) => Some(*v),
                Point::Zero => None,
            })
            .collect();
        vars.sort();
        vars.dedup();
        self.integrate_all_in_order(terms, &default_order(&vars))
    }

    /// Wedge integral of one propagator product.
    pub fn integrate_pattern(&self, pattern: &Pattern) -> Result<ScalarSeries, IntegrationError> {
        let vars = wedge_vars(pattern);
        self.integrate_all(resolve_absolute_values(pattern, &vars))
    }

    pub fn integrate_pattern_in_order(&self, pattern: &Pattern, order: &[TimeVar]) -> Result<ScalarSeries, IntegrationError> {
        let vars = wedge_vars(pattern);
        self.integrate_all_in_order(resolve_absolute_values(pattern, &vars), order)
    }

    /// Wedge integral of a whole sum. Patterns are integrated independently
    /// and summed in canonical order.
    pub fn integrate_sum(&self, sum: &PropagatorSum) -> Result<ScalarSeries, IntegrationError> {
        let items: Vec<(&Pattern, &ScalarSeries)> = sum.terms().collect();
        let parts: Vec<Result<ScalarSeries, IntegrationError>> = items
            .par_iter()
            .map(|(p, c)| self.integrate_pattern(p).map(|v| &v * *c))
            .collect();
        let mut out = ScalarSeries::zero();
        for p in parts {
            out += &p?;
        }
        Ok(out)
    }
}

/// Variables integrated for a pattern: both external times plus its vertices.
pub fn wedge_vars(pattern: &Pattern) -> Vec<TimeVar> {
    let mut vars = vec![TimeVar::Tau1, TimeVar::Tau2];
    vars.extend(pattern.vertices().into_iter().map(TimeVar::Vertex));
    vars
}

pub fn default_order(vars: &[TimeVar]) -> Vec<TimeVar> {
    let mut order: Vec<TimeVar> = vars.iter().copied().filter(|v| v.is_vertex()).collect();
    order.sort();
    if vars.contains(&TimeVar::Tau2) {
        order.push(TimeVar::Tau2);
    }
    if vars.contains(&TimeVar::Tau1) {
        order.push(TimeVar::Tau1);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeVar::{Tau1, Tau2, Vertex};

    fn pat(edges: &[(TimeVar, TimeVar)]) -> Pattern {
        Pattern::new(edges.to_vec())
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn single_propagator_chamber() {
        let terms = resolve_absolute_values(&pat(&[(Tau1, Tau2)]), &[Tau1, Tau2]);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].rates[&Tau1], rat(1, 1));
        assert_eq!(terms[0].rates[&Tau2], rat(-1, 1));
        assert_eq!(terms[0].scalar, ScalarTerm::new(rat(1, 2), -1, 0, 0));
    }

    #[test]
    fn equal_time_propagator_is_constant() {
        let terms = resolve_absolute_values(&pat(&[(Tau1, Tau1)]), &[Tau1]);
        assert_eq!(terms.len(), 1);
        assert!(terms[0].rates.is_empty());
        assert_eq!(terms[0].scalar, ScalarTerm::new(rat(1, 2), -1, 0, 0));
    }

    #[test]
    fn vertex_between_external_times() {
        let p = pat(&[(Tau1, Vertex(1)), (Tau2, Vertex(1))]);
        let terms = resolve_absolute_values(&p, &[Tau1, Tau2, Vertex(1)]);
        assert_eq!(terms.len(), 4);
        let s = Point::Var(Vertex(1));
        let t1 = Point::Var(Tau1);
        let t2 = Point::Var(Tau2);
        for t in &terms {
            let o = &t.chamber.ordering;
            let ps = o.iter().position(|x| *x == s).unwrap();
            let between = ps > o.iter().position(|x| *x == t1).unwrap() && ps < o.iter().position(|x| *x == t2).unwrap();
            assert_eq!(t.rates.get(&Vertex(1)).is_none(), between, "{t}");
        }
        // integrating the vertex out, summed over chambers, matches quadrature
        let (alpha, a, b) = (1.0, -1.0, 2.0);
        let mut total = 0.0;
        let vals: BTreeMap<TimeVar, f64> = [(Tau1, a), (Tau2, b)].into_iter().collect();
        for t in &terms {
            for r in Integrator::new().integrate_innermost(t, Vertex(1)).unwrap() {
                total += r.eval(alpha, &vals);
            }
        }
        let f = |s: f64| propagator_value(alpha, s, a) * propagator_value(alpha, s, b);
        let quad = simpson(f, -40.0, a, 20000) + simpson(f, a, b, 20000) + simpson(f, b, 40.0, 20000);
        assert!((total - quad).abs() < 1e-10, "{total} vs {quad}");
        // middle chamber alone is (t2 - t1) e^{-√α(t2-t1)} / 4α
        let middle: f64 = terms
            .iter()
            .filter(|t| t.rates.get(&Vertex(1)).is_none())
            .flat_map(|t| Integrator::new().integrate_innermost(t, Vertex(1)).unwrap())
            .map(|r| r.eval(alpha, &vals))
            .sum();
        assert!((middle - (b - a) * (-(b - a)).exp() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn elementary_kernels() {
        let integ = Integrator::new();
        // ∫_0^∞ e^{-√α t2} dt2 = 1/√α
        let t = ExpPolyTerm {
            scalar: ScalarTerm::new(rat(1, 1), 0, 0, 0),
            monomial: BTreeMap::new(),
            rates: [(Tau2, rat(-1, 1))].into_iter().collect(),
            chamber: Chamber { ordering: vec![Point::Zero, Point::Var(Tau2)] },
        };
        assert_eq!(integ.integrate_all(vec![t]).unwrap(), ScalarSeries::monomial(rat(1, 1), -1, 0, 0));
        // ∫_0^∞ u e^{-2√α u} du = 1/(4α)
        let t = ExpPolyTerm {
            scalar: ScalarTerm::new(rat(1, 1), 0, 0, 0),
            monomial: [(Tau2, 1)].into_iter().collect(),
            rates: [(Tau2, rat(-2, 1))].into_iter().collect(),
            chamber: Chamber { ordering: vec![Point::Zero, Point::Var(Tau2)] },
        };
        assert_eq!(integ.integrate_all(vec![t]).unwrap(), ScalarSeries::monomial(rat(1, 4), -2, 0, 0));
    }

    #[test]
    fn wedge_integrals() {
        let integ = Integrator::new();
        assert_eq!(
            integ.integrate_pattern(&pat(&[(Tau1, Tau2)])).unwrap(),
            ScalarSeries::monomial(rat(1, 2), -3, 0, 0)
        );
        let two = integ.integrate_pattern(&pat(&[(Tau1, Tau2), (Tau1, Tau2)])).unwrap();
        assert_eq!(two.scale(&rat(2, 4)), ScalarSeries::monomial(rat(1, 32), -4, 0, 0));
        // -2J D(s,t1) D(t1,t2), prefactor 1/2, J folded separately
        let g = integ.integrate_pattern(&pat(&[(Tau1, Vertex(1)), (Tau1, Tau2)])).unwrap();
        assert_eq!(g.scale(&rat(-1, 1)), ScalarSeries::monomial(rat(-1, 2), -5, 0, 0));
    }

    #[test]
    fn divergences() {
        let integ = Integrator::new();
        // no link between the external times: the t1 integral is unbounded
        let e = integ.integrate_pattern(&pat(&[(Tau1, Tau1), (Tau2, Tau2)])).unwrap_err();
        assert!(matches!(e, IntegrationError::DivergentIntegral { .. }));
        let e = Integrator::for_alpha(0.0).integrate_pattern(&pat(&[(Tau1, Tau2)])).unwrap_err();
        assert!(matches!(e, IntegrationError::DivergentIntegral { .. }));
        assert!(Integrator::for_alpha(-1.0).integrate_pattern(&pat(&[(Tau1, Tau2)])).is_err());
        assert!(Integrator::for_alpha(0.5).integrate_pattern(&pat(&[(Tau1, Tau2)])).is_ok());
    }

    #[test]
    fn green_function_jump() {
        let alpha: f64 = 1.7;
        let h = 1e-6;
        let right = (propagator_value(alpha, h, 0.0) - propagator_value(alpha, 2.0 * h, 0.0)) / -h;
        let left = (propagator_value(alpha, -h, 0.0) - propagator_value(alpha, -2.0 * h, 0.0)) / h;
        assert!(((right - left) + 1.0).abs() < 1e-5);
        // away from the source (∂² - α) D = 0
        let t = 0.8;
        let d2 = (propagator_value(alpha, t + 1e-4, 0.0) - 2.0 * propagator_value(alpha, t, 0.0)
            + propagator_value(alpha, t - 1e-4, 0.0))
            / 1e-8;
        assert!((d2 - alpha * propagator_value(alpha, t, 0.0)).abs() < 1e-6);
    }

    #[test]
    fn fubini_two_vertices() {
        let p = pat(&[
            (Tau1, Vertex(1)),
            (Vertex(1), Vertex(2)),
            (Vertex(2), Tau2),
            (Tau1, Tau2),
            (Vertex(1), Vertex(2)),
            (Vertex(2), Vertex(2)),
        ]);
        let integ = Integrator::new();
        let reference = integ.integrate_pattern(&p).unwrap();
        for order in [
            vec![Vertex(2), Vertex(1), Tau2, Tau1],
            vec![Vertex(1), Vertex(2), Tau1, Tau2],
            vec![Tau1, Vertex(1), Tau2, Vertex(2)],
            vec![Tau2, Tau1, Vertex(2), Vertex(1)],
        ] {
            assert_eq!(integ.integrate_pattern_in_order(&p, &order).unwrap(), reference, "{order:?}");
        }
        assert!(matches!(
            integ.integrate_pattern_in_order(&p, &[Vertex(1), Tau2, Tau1]),
            Err(IntegrationError::IncompleteOrder(_))
        ));
    }

    #[test]
    fn dimensional_scaling() {
        let patterns = [
            pat(&[(Tau1, Tau2), (Tau1, Tau2)]),
            pat(&[(Tau1, Vertex(1)), (Tau1, Vertex(1)), (Tau2, Vertex(1)), (Tau2, Vertex(1))]),
            pat(&[(Tau1, Vertex(1)), (Tau2, Vertex(2)), (Vertex(1), Vertex(2)), (Tau1, Tau2)]),
        ];
        for p in patterns {
            let v = wedge_vars(&p).len() as i32;
            let e = p.edges().len() as i32;
            let s = Integrator::new().integrate_pattern(&p).unwrap();
            assert!(s.terms().all(|t| t.alpha_half_pow == -(e + v)), "{p}: {s}");
        }
    }
}
