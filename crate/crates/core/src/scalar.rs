//! Exact scalar series in the formal symbols `a` (the oscillator stiffness α,
//! carried with half-integer exponents), `l` (the coupling λ) and `j` (the
//! linear source J).
//!
//! Every component of the geometric tensor produced by this crate is a finite
//! sum of terms `c · a^(p/2) · l^m · j^n` with rational `c`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Builds a rational from two machine integers. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalarError {
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("cannot parse series: {0}")]
    Parse(String),
}

/// Exponents of one monomial. Ordering is by `(lambda_pow, j_pow, alpha_half_pow)`,
/// which is the canonical term order of a [`ScalarSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub lambda_pow: u32,
    pub j_pow: u32,
    pub alpha_half_pow: i32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { lambda_pow: 0, j_pow: 0, alpha_half_pow: 0 };

    pub fn new(alpha_half_pow: i32, lambda_pow: u32, j_pow: u32) -> Self {
        Monomial { lambda_pow, j_pow, alpha_half_pow }
    }

    fn mul(self, other: Monomial) -> Monomial {
        Monomial {
            lambda_pow: self.lambda_pow + other.lambda_pow,
            j_pow: self.j_pow + other.j_pow,
            alpha_half_pow: self.alpha_half_pow + other.alpha_half_pow,
        }
    }
}

/// A single term `coeff · α^(alpha_half_pow/2) · λ^lambda_pow · J^j_pow`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScalarTerm {
    pub coeff: Rational,
    pub alpha_half_pow: i32,
    pub lambda_pow: u32,
    pub j_pow: u32,
}

impl ScalarTerm {
    pub fn new(coeff: Rational, alpha_half_pow: i32, lambda_pow: u32, j_pow: u32) -> Self {
        ScalarTerm { coeff, alpha_half_pow, lambda_pow, j_pow }
    }

    pub fn monomial(&self) -> Monomial {
        Monomial::new(self.alpha_half_pow, self.lambda_pow, self.j_pow)
    }

    pub fn eval(&self, alpha: f64, lambda: f64, j: f64) -> f64 {
        rational_to_f64(&self.coeff)
            * alpha.powf(f64::from(self.alpha_half_pow) / 2.0)
            * lambda.powi(self.lambda_pow as i32)
            * j.powi(self.j_pow as i32)
    }
}

impl Mul for &ScalarTerm {
    type Output = ScalarTerm;

    fn mul(self, rhs: &ScalarTerm) -> ScalarTerm {
        let m = self.monomial().mul(rhs.monomial());
        ScalarTerm::new(&self.coeff * &rhs.coeff, m.alpha_half_pow, m.lambda_pow, m.j_pow)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Canonical exact sum of [`ScalarTerm`]s. Like terms are merged and zero
/// coefficients are never stored, so structural equality is value equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ScalarSeries {
    terms: BTreeMap<Monomial, Rational>,
}

impl ScalarSeries {
    pub fn zero() -> Self {
        ScalarSeries::default()
    }

    pub fn one() -> Self {
        ScalarSeries::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        ScalarSeries::monomial(c, 0, 0, 0)
    }

    pub fn monomial(coeff: Rational, alpha_half_pow: i32, lambda_pow: u32, j_pow: u32) -> Self {
        let mut s = ScalarSeries::zero();
        s.add_term(Monomial::new(alpha_half_pow, lambda_pow, j_pow), coeff);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = ScalarTerm>>(terms: I) -> Self {
        let mut s = ScalarSeries::zero();
        for t in terms {
            let m = t.monomial();
            s.add_term(m, t.coeff);
        }
        s
    }

    fn add_term(&mut self, m: Monomial, coeff: Rational) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Rational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = ScalarTerm> + '_ {
        self.terms
            .iter()
            .map(|(m, c)| ScalarTerm::new(c.clone(), m.alpha_half_pow, m.lambda_pow, m.j_pow))
    }

    pub fn coefficient(&self, alpha_half_pow: i32, lambda_pow: u32, j_pow: u32) -> Rational {
        self.terms
            .get(&Monomial::new(alpha_half_pow, lambda_pow, j_pow))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> ScalarSeries {
        let mut out = ScalarSeries::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, v * c);
        }
        out
    }

    /// Drops every term with λ power above `order`.
    pub fn truncate_lambda(&self, order: u32) -> ScalarSeries {
        ScalarSeries {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.lambda_pow <= order)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// The part multiplying exactly `λ^order`, with the λ power removed.
    pub fn lambda_coefficient(&self, order: u32) -> ScalarSeries {
        let mut out = ScalarSeries::zero();
        for (m, c) in &self.terms {
            if m.lambda_pow == order {
                out.add_term(Monomial { lambda_pow: 0, ..*m }, c.clone());
            }
        }
        out
    }

    pub fn max_lambda_pow(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.lambda_pow).max()
    }

    /// Floating evaluation at a parameter point.
    pub fn eval(&self, alpha: f64, lambda: f64, j: f64) -> Result<f64, ScalarError> {
        if !(alpha > 0.0) {
            return Err(ScalarError::NonPositiveAlpha(alpha));
        }
        Ok(self.terms().map(|t| t.eval(alpha, lambda, j)).sum())
    }

    /// Multiplies and keeps only terms up to `λ^order`.
    pub fn mul_truncated(&self, other: &ScalarSeries, order: u32) -> ScalarSeries {
        let mut out = ScalarSeries::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(*mb);
                if m.lambda_pow <= order {
                    out.add_term(m, ca * cb);
                }
            }
        }
        out
    }
}

impl From<ScalarTerm> for ScalarSeries {
    fn from(t: ScalarTerm) -> Self {
        ScalarSeries::from_terms([t])
    }
}

impl Add for &ScalarSeries {
    type Output = ScalarSeries;
    fn add(self, rhs: &ScalarSeries) -> ScalarSeries {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for ScalarSeries {
    type Output = ScalarSeries;
    fn add(mut self, rhs: ScalarSeries) -> ScalarSeries {
        self += &rhs;
        self
    }
}

impl AddAssign<&ScalarSeries> for ScalarSeries {
    fn add_assign(&mut self, rhs: &ScalarSeries) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl Neg for &ScalarSeries {
    type Output = ScalarSeries;
    fn neg(self) -> ScalarSeries {
        ScalarSeries { terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect() }
    }
}

impl Neg for ScalarSeries {
    type Output = ScalarSeries;
    fn neg(self) -> ScalarSeries {
        -&self
    }
}

impl Sub for &ScalarSeries {
    type Output = ScalarSeries;
    fn sub(self, rhs: &ScalarSeries) -> ScalarSeries {
        self + &(-rhs)
    }
}

impl Sub for ScalarSeries {
    type Output = ScalarSeries;
    fn sub(self, rhs: ScalarSeries) -> ScalarSeries {
        &self - &rhs
    }
}

impl Mul for &ScalarSeries {
    type Output = ScalarSeries;
    fn mul(self, rhs: &ScalarSeries) -> ScalarSeries {
        let mut out = ScalarSeries::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(*mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for ScalarSeries {
    type Output = ScalarSeries;
    fn mul(self, rhs: ScalarSeries) -> ScalarSeries {
        &self * &rhs
    }
}

/// `3/2` for 3 half powers, `2` for 4.
pub fn half_power_string(half: i32) -> String {
    if half % 2 == 0 {
        format!("{}", half / 2)
    } else {
        format!("{}/2", half)
    }
}

fn fmt_var(f: &mut fmt::Formatter<'_>, first: &mut bool, name: &str, pow: String) -> fmt::Result {
    if !*first {
        f.write_str(" * ")?;
    }
    *first = false;
    if pow == "1" {
        f.write_str(name)
    } else {
        write!(f, "{name}^{pow}")
    }
}

/// Canonical text form, e.g. `1/32 * a^-2 - 11/512 * l * a^-7/2`.
impl fmt::Display for ScalarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mag = c.abs();
            let bare = *m == Monomial::ONE;
            let mut first = true;
            if !mag.is_one() || bare {
                write!(f, "{mag}")?;
                first = false;
            }
            if m.lambda_pow > 0 {
                fmt_var(f, &mut first, "l", m.lambda_pow.to_string())?;
            }
            if m.j_pow > 0 {
                fmt_var(f, &mut first, "j", m.j_pow.to_string())?;
            }
            if m.alpha_half_pow != 0 {
                fmt_var(f, &mut first, "a", half_power_string(m.alpha_half_pow))?;
            }
        }
        Ok(())
    }
}

fn parse_factor(tok: &str, coeff: &mut Rational, mono: &mut Monomial) -> Result<(), ScalarError> {
    let err = || ScalarError::Parse(format!("bad factor `{tok}`"));
    let (name, pow) = match tok.split_once('^') {
        Some((n, p)) => (n, Some(p)),
        None => (tok, None),
    };
    match name {
        "a" => {
            let half = match pow {
                None => 2,
                Some(p) => match p.split_once('/') {
                    Some((n, "2")) => n.parse::<i32>().map_err(|_| err())?,
                    Some(_) => return Err(err()),
                    None => 2 * p.parse::<i32>().map_err(|_| err())?,
                },
            };
            mono.alpha_half_pow += half;
        }
        "l" | "j" => {
            let p = match pow {
                None => 1,
                Some(p) => p.parse::<u32>().map_err(|_| err())?,
            };
            if name == "l" {
                mono.lambda_pow += p;
            } else {
                mono.j_pow += p;
            }
        }
        _ => {
            if pow.is_some() {
                return Err(err());
            }
            let r: Rational = name.parse().map_err(|_| err())?;
            *coeff *= r;
        }
    }
    Ok(())
}

impl FromStr for ScalarSeries {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = ScalarSeries::zero();
        let mut sign = Rational::one();
        let mut coeff = Rational::one();
        let mut mono = Monomial::ONE;
        let mut open = false;
        let mut expect_factor = true;
        for tok in s.split_whitespace() {
            match tok {
                "+" | "-" if !expect_factor || !open => {
                    if open {
                        out.add_term(mono, &sign * &coeff);
                        open = false;
                    }
                    sign = if tok == "-" { -Rational::one() } else { Rational::one() };
                    coeff = Rational::one();
                    mono = Monomial::ONE;
                    expect_factor = true;
                }
                "*" => {
                    if expect_factor {
                        return Err(ScalarError::Parse("dangling `*`".into()));
                    }
                    expect_factor = true;
                }
                _ => {
                    if !expect_factor {
                        return Err(ScalarError::Parse(format!("missing operator before `{tok}`")));
                    }
                    let body = if let Some(rest) = tok.strip_prefix('-') {
                        sign = -sign;
                        rest
                    } else {
                        tok
                    };
                    parse_factor(body, &mut coeff, &mut mono)?;
                    open = true;
                    expect_factor = false;
                }
            }
        }
        if expect_factor && open {
            return Err(ScalarError::Parse("trailing operator".into()));
        }
        if open {
            out.add_term(mono, &sign * &coeff);
        } else if !s.trim().is_empty() {
            return Err(ScalarError::Parse("empty term".into()));
        }
        Ok(out)
    }
}
