//! Interacting Green's functions as ratios of free-oscillator moments,
//! expanded as formal power series in the coupling λ.
//!
//! An order-`m` term inserts `m` interaction vertices `s1..sm`, each carrying
//! `-λ V(q)`, with weight `1/m!`. Numerator and denominator are divided as
//! truncated power series; vacuum pieces cancel exactly in the process.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Rational, ScalarSeries};
use crate::time::TimeVar;
use crate::wick::{moment, GaussianModel, InsertionPoint, PropagatorSum};

/// Orders above this need an explicit override.
pub const DEFAULT_MAX_ORDER: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbationError {
    #[error("perturbative order {requested} exceeds the configured maximum {max}")]
    OrderOverflow { requested: u32, max: u32 },
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
}

/// Parameters of the oscillator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Alpha,
    Lambda,
    J,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::Alpha => "alpha",
            Parameter::Lambda => "lambda",
            Parameter::J => "j",
        })
    }
}

impl std::str::FromStr for Parameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" | "a" => Ok(Parameter::Alpha),
            "lambda" | "l" => Ok(Parameter::Lambda),
            "j" | "J" => Ok(Parameter::J),
            _ => Err(format!("unknown parameter `{s}`")),
        }
    }
}

/// `V(q) = Σ c_n q^n` with finite support and degrees >= 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialPotential {
    coefficients: BTreeMap<u32, Rational>,
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

impl PolynomialPotential {
    pub fn new(coefficients: BTreeMap<u32, Rational>) -> Result<Self, PerturbationError> {
        let coefficients: BTreeMap<u32, Rational> =
            coefficients.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if coefficients.is_empty() {
            return Err(PerturbationError::InvalidPotential("no nonzero coefficients".into()));
        }
        if coefficients.contains_key(&0) {
            return Err(PerturbationError::InvalidPotential("constant terms are not allowed".into()));
        }
        Ok(PolynomialPotential { coefficients })
    }

    /// `q^k / k!`.
    pub fn monomial(k: u32) -> Self {
        assert!(k >= 1, "monomial degree must be positive");
        let c = Rational::new(BigInt::one(), factorial(k));
        PolynomialPotential { coefficients: [(k, c)].into_iter().collect() }
    }

    pub fn quartic() -> Self {
        PolynomialPotential::monomial(4)
    }

    pub fn coefficients(&self) -> &BTreeMap<u32, Rational> {
        &self.coefficients
    }

    pub fn degree(&self) -> u32 {
        *self.coefficients.keys().next_back().unwrap()
    }

    /// The single `(degree, coefficient)` of a monomial potential.
    pub fn as_monomial(&self) -> Option<(u32, &Rational)> {
        if self.coefficients.len() == 1 {
            self.coefficients.iter().next().map(|(k, c)| (*k, c))
        } else {
            None
        }
    }
}

/// Operator `prefactor · q^q_power` conjugate to `parameter`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeformationOperator {
    pub parameter: Parameter,
    pub q_power: u32,
    pub prefactor: Rational,
}

impl DeformationOperator {
    /// `O_α = -q²/2`.
    pub fn alpha() -> Self {
        DeformationOperator { parameter: Parameter::Alpha, q_power: 2, prefactor: -Rational::new(1.into(), 2.into()) }
    }

    /// `O_J = -q`.
    pub fn source() -> Self {
        DeformationOperator { parameter: Parameter::J, q_power: 1, prefactor: -Rational::one() }
    }

    /// `O_λ = -V(q)` for a monomial potential.
    pub fn coupling(potential: &PolynomialPotential) -> Result<Self, PerturbationError> {
        let (k, c) = potential.as_monomial().ok_or_else(|| {
            PerturbationError::InvalidPotential("the coupling operator needs a monomial potential".into())
        })?;
        Ok(DeformationOperator { parameter: Parameter::Lambda, q_power: k, prefactor: -c.clone() })
    }
}

/// Truncation order and interaction of a perturbative calculation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbativeExpansion {
    pub order: u32,
    pub interaction: PolynomialPotential,
}

impl PerturbativeExpansion {
    pub fn new(order: u32, interaction: PolynomialPotential) -> Result<Self, PerturbationError> {
        Self::with_max_order(order, interaction, DEFAULT_MAX_ORDER)
    }

    pub fn with_max_order(order: u32, interaction: PolynomialPotential, max: u32) -> Result<Self, PerturbationError> {
        if order > max {
            return Err(PerturbationError::OrderOverflow { requested: order, max });
        }
        Ok(PerturbativeExpansion { order, interaction })
    }
}

/// Coefficients of `λ^0 .. λ^M`; the λ power itself is not stored in them.
pub type LambdaSeries = Vec<PropagatorSum>;

/// Numerator and denominator series of an interacting Green's function.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenRatio {
    pub numerator: LambdaSeries,
    pub denominator: LambdaSeries,
}

impl GreenRatio {
    /// Formal division truncated at the expansion order, per λ power.
    pub fn divide(&self) -> LambdaSeries {
        series_mul(&self.numerator, &series_inverse(&self.denominator))
    }

    /// The quotient with `λ^m` folded into the coefficients.
    pub fn expand(&self) -> PropagatorSum {
        fold_lambda(&self.divide())
    }
}

fn series_mul(a: &LambdaSeries, b: &LambdaSeries) -> LambdaSeries {
    let order = a.len().min(b.len());
    (0..order)
        .map(|m| {
            (0..=m).fold(PropagatorSum::zero(), |acc, i| acc.add(&a[i].mul_integrated(&b[m - i], u32::MAX)))
        })
        .collect()
}

fn series_inverse(d: &LambdaSeries) -> LambdaSeries {
    assert_eq!(d[0], PropagatorSum::one(), "denominator must start at 1");
    let mut inv: LambdaSeries = vec![PropagatorSum::one()];
    for m in 1..d.len() {
        let mut acc = PropagatorSum::zero();
        for i in 1..=m {
            acc = acc.add(&d[i].mul_integrated(&inv[m - i], u32::MAX));
        }
        inv.push(PropagatorSum::zero().sub(&acc));
    }
    inv
}

pub fn fold_lambda(series: &LambdaSeries) -> PropagatorSum {
    let mut out = PropagatorSum::zero();
    for (m, part) in series.iter().enumerate() {
        out = out.add(&part.scale(&ScalarSeries::monomial(Rational::one(), 0, m as u32, 0)));
    }
    out
}

/// Every way to assign a potential degree to each of `m` vertices, with the
/// product of coefficients.
fn vertex_assignments(potential: &PolynomialPotential, m: u32) -> Vec<(Vec<u32>, Rational)> {
    let mut out = vec![(Vec::new(), Rational::one())];
    for _ in 0..m {
        let mut next = Vec::new();
        for (degrees, w) in &out {
            for (k, c) in potential.coefficients() {
                let mut d = degrees.clone();
                d.push(*k);
                next.push((d, w * c));
            }
        }
        out = next;
    }
    out
}

/// `(-1)^m/m! Σ ∫ds1..dsm <points · V(q(s1)) ... V(q(sm))>_0`, vertex labels canonical.
fn order_term(points: &[InsertionPoint], potential: &PolynomialPotential, m: u32) -> PropagatorSum {
    let sign = if m.is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
    let weight = Rational::new(sign, factorial(m));
    let mut out = PropagatorSum::zero();
    for (degrees, c) in vertex_assignments(potential, m) {
        let mut all = points.to_vec();
        all.extend(degrees.iter().enumerate().map(|(i, &k)| InsertionPoint::new(TimeVar::Vertex(i as u32 + 1), k)));
        let coeff = ScalarSeries::constant(&weight * &c);
        out = out.add(&moment(&GaussianModel::free(), &all).scale(&coeff));
    }
    out.canonicalized()
}

/// Interacting `<Π q^n(t)>` as numerator/denominator series up to `λ^M`.
pub fn interacting_green(points: &[InsertionPoint], expansion: &PerturbativeExpansion) -> GreenRatio {
    let orders = 0..=expansion.order;
    GreenRatio {
        numerator: orders.clone().map(|m| order_term(points, &expansion.interaction, m)).collect(),
        denominator: orders.map(|m| order_term(&[], &expansion.interaction, m)).collect(),
    }
}

/// `<q^a(t1) q^b(t2)> - <q^a(t1)><q^b(t2)>` in the interacting theory, per λ power.
pub fn connected_series(a_power: u32, b_power: u32, expansion: &PerturbativeExpansion) -> LambdaSeries {
    let a = [InsertionPoint::new(TimeVar::Tau1, a_power)];
    let b = [InsertionPoint::new(TimeVar::Tau2, b_power)];
    let ab = [a[0], b[0]];
    let joint = interacting_green(&ab, expansion).divide();
    let product = series_mul(&interacting_green(&a, expansion).divide(), &interacting_green(&b, expansion).divide());
    joint.iter().zip(product.iter()).map(|(x, y)| x.sub(y)).collect()
}

/// Connected integrand of the pair `(O_a, O_b)` with λ powers folded in.
/// Operator prefactors are not applied.
pub fn connected_integrand(
    oa: &DeformationOperator,
    ob: &DeformationOperator,
    expansion: &PerturbativeExpansion,
) -> PropagatorSum {
    fold_lambda(&connected_series(oa.q_power, ob.q_power, expansion))
}

/// Number of terms containing a vacuum bubble.
pub fn vacuum_term_count(sum: &PropagatorSum) -> usize {
    sum.terms().filter(|(p, _)| p.has_vacuum_component()).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::time::TimeVar::{Tau1, Tau2, Vertex};
    use crate::wick::Pattern;

    fn quartic(m: u32) -> PerturbativeExpansion {
        PerturbativeExpansion::new(m, PolynomialPotential::quartic()).unwrap()
    }

    fn c(n: i64, d: i64) -> ScalarSeries {
        ScalarSeries::constant(rat(n, d))
    }

    #[test]
    fn order_zero_is_free() {
        let pts = [InsertionPoint::new(Tau1, 2), InsertionPoint::new(Tau2, 2)];
        let g = interacting_green(&pts, &quartic(0)).expand();
        assert_eq!(g, moment(&GaussianModel::free(), &pts));
    }

    #[test]
    fn two_point_first_order() {
        // G2int(t^2) = G2(t,t) - λ/4! ∫ds [G6(t^2,s^4) - G2(t^2) G4(s^4)]
        let pts = [InsertionPoint::new(Tau1, 2)];
        let ratio = interacting_green(&pts, &quartic(1));
        let g6 = moment(&GaussianModel::free(), &[pts[0], InsertionPoint::new(Vertex(1), 4)]);
        let g2 = moment(&GaussianModel::free(), &pts);
        let g4 = moment(&GaussianModel::free(), &[InsertionPoint::new(Vertex(1), 4)]);
        let expected = g6.sub(&g2.mul(&g4)).scale(&c(-1, 24));
        assert_eq!(ratio.divide()[1], expected.canonicalized());
        // only the connected diagram 12 D(t1,s1)^2 D(s1,s1) survives
        let p = Pattern::new(vec![(Tau1, Vertex(1)), (Tau1, Vertex(1)), (Vertex(1), Vertex(1))]);
        assert_eq!(ratio.divide()[1], PropagatorSum::single(p, c(-12, 24)));
    }

    #[test]
    fn four_point_first_order() {
        let pts = [InsertionPoint::new(Tau1, 2), InsertionPoint::new(Tau2, 2)];
        let ratio = interacting_green(&pts, &quartic(1));
        let free = GaussianModel::free();
        let s = InsertionPoint::new(Vertex(1), 4);
        let g8 = moment(&free, &[pts[0], pts[1], s]);
        let g4 = moment(&free, &pts);
        let g4s = moment(&free, &[s]);
        let expected = g8.sub(&g4.mul(&g4s)).scale(&c(-1, 24));
        assert_eq!(ratio.divide()[1], expected.canonicalized());
    }

    #[test]
    fn alpha_alpha_integrand() {
        let oa = DeformationOperator::alpha();
        let series = connected_series(oa.q_power, oa.q_power, &quartic(1));
        assert_eq!(
            series[0],
            PropagatorSum::single(Pattern::new(vec![(Tau1, Tau2), (Tau1, Tau2)]), c(2, 1))
        );
        // -λ/4! I_αα with I_αα = 24 (2 D1s D2s D0 D12 + D1s^2 D2s^2)
        let i_aa = series[1].scale(&c(-24, 1));
        let mut expected = PropagatorSum::zero();
        expected.add_term(
            Pattern::new(vec![(Tau1, Vertex(1)), (Tau2, Vertex(1)), (Vertex(1), Vertex(1)), (Tau1, Tau2)]),
            c(48, 1),
        );
        expected.add_term(
            Pattern::new(vec![(Tau1, Vertex(1)), (Tau1, Vertex(1)), (Tau2, Vertex(1)), (Tau2, Vertex(1))]),
            c(24, 1),
        );
        assert_eq!(i_aa, expected);
    }

    #[test]
    fn vacuum_bubbles_cancel() {
        for k in [1u32, 3, 4] {
            let pot = PolynomialPotential::monomial(k);
            for m in 0..=2 {
                let exp = PerturbativeExpansion::new(m, pot.clone()).unwrap();
                for (a, b) in [(2u32, 2u32), (2, k), (k, k), (1, 2)] {
                    let s = connected_series(a, b, &exp);
                    for part in &s {
                        assert_eq!(vacuum_term_count(part), 0, "k={k} m={m} ({a},{b})");
                        assert!(part.terms().all(|(p, _)| p.is_connected()), "k={k} m={m} ({a},{b})");
                    }
                }
                let g = interacting_green(&[InsertionPoint::new(Tau1, 2)], &exp).expand();
                assert_eq!(vacuum_term_count(&g), 0);
            }
        }
    }

    #[test]
    fn odd_potential_parity_zero() {
        let exp = PerturbativeExpansion::new(1, PolynomialPotential::monomial(3)).unwrap();
        let s = connected_series(2, 2, &exp);
        assert!(s[1].is_zero());
    }

    #[test]
    fn order_cap() {
        assert_eq!(
            PerturbativeExpansion::new(3, PolynomialPotential::quartic()),
            Err(PerturbationError::OrderOverflow { requested: 3, max: 2 })
        );
        assert!(PerturbativeExpansion::with_max_order(3, PolynomialPotential::quartic(), 3).is_ok());
    }

    #[test]
    fn potentials_and_operators() {
        assert!(PolynomialPotential::new(BTreeMap::new()).is_err());
        assert!(PolynomialPotential::new([(0, rat(1, 1))].into_iter().collect()).is_err());
        let mixed = PolynomialPotential::new([(2, rat(1, 2)), (4, rat(1, 24))].into_iter().collect()).unwrap();
        assert!(DeformationOperator::coupling(&mixed).is_err());
        assert_eq!(mixed.degree(), 4);
        let o = DeformationOperator::coupling(&PolynomialPotential::quartic()).unwrap();
        assert_eq!((o.q_power, o.prefactor), (4, rat(-1, 24)));
    }

    #[test]
    fn mixed_potential_is_linear_in_coefficients() {
        // a V1 + b V2 at first order equals the sum of the separate first orders
        let v = PolynomialPotential::new([(2, rat(1, 2)), (4, rat(1, 24))].into_iter().collect()).unwrap();
        let both = connected_series(2, 2, &PerturbativeExpansion::new(1, v).unwrap());
        let q2 = connected_series(2, 2, &PerturbativeExpansion::new(1, PolynomialPotential::monomial(2)).unwrap());
        let q4 = connected_series(2, 2, &PerturbativeExpansion::new(1, PolynomialPotential::monomial(4)).unwrap());
        assert_eq!(both[1], q2[1].add(&q4[1]));
    }
}
