//! Wick contractions of Gaussian moments `<q^n1(t1) ... q^nk(tk)>`.
//!
//! Moments are returned as a [`PropagatorSum`]: a map from propagator
//! products (edge multisets over time variables) to exact coefficients.
//! With a constant source the Gaussian acquires the mean `-J/α`, and every leg
//! routed to the mean contributes that factor instead of a propagator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::scalar::{rat, Rational, ScalarSeries};
use crate::time::TimeVar;

/// Unordered propagator endpoints, stored with the smaller variable first.
pub type Edge = (TimeVar, TimeVar);

pub fn edge(a: TimeVar, b: TimeVar) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `q^power` inserted at `time_var`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertionPoint {
    pub time_var: TimeVar,
    pub power: u32,
}

impl InsertionPoint {
    pub fn new(time_var: TimeVar, power: u32) -> Self {
        assert!(power >= 1, "insertion power must be positive");
        InsertionPoint { time_var, power }
    }
}

/// A product of propagators, canonically sorted. Self edges `D(t,t)` stand for
/// the equal-time value `D(0)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<Edge>);

impl Pattern {
    pub fn new(mut edges: Vec<Edge>) -> Self {
        for e in edges.iter_mut() {
            *e = edge(e.0, e.1);
        }
        edges.sort();
        Pattern(edges)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.0
    }

    pub fn vars(&self) -> BTreeSet<TimeVar> {
        self.0.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn vertices(&self) -> BTreeSet<u32> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                TimeVar::Vertex(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn product(&self, other: &Pattern) -> Pattern {
        let mut edges = self.0.clone();
        edges.extend_from_slice(&other.0);
        Pattern::new(edges)
    }

    pub fn relabel(&self, f: impl Fn(TimeVar) -> TimeVar) -> Pattern {
        Pattern::new(self.0.iter().map(|&(a, b)| (f(a), f(b))).collect())
    }

    /// Relabels interaction vertices to `s1..sm` choosing the lexicographically
    /// smallest result, so patterns equal up to vertex renaming compare equal.
    pub fn canonical(&self) -> Pattern {
        let labels: Vec<u32> = self.vertices().into_iter().collect();
        if labels.is_empty() {
            return self.clone();
        }
        let mut best: Option<Pattern> = None;
        let mut perm: Vec<u32> = (1..=labels.len() as u32).collect();
        loop {
            let map: BTreeMap<u32, u32> = labels.iter().copied().zip(perm.iter().copied()).collect();
            let candidate = self.relabel(|v| match v {
                TimeVar::Vertex(n) => TimeVar::Vertex(map[&n]),
                other => other,
            });
            if best.as_ref().is_none_or(|b| candidate < *b) {
                best = Some(candidate);
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.unwrap()
    }

    fn components(&self) -> Vec<BTreeSet<TimeVar>> {
        let vars: Vec<TimeVar> = self.vars().into_iter().collect();
        let index: BTreeMap<TimeVar, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let mut parent: Vec<usize> = (0..vars.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.0 {
            let (ra, rb) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
            parent[ra] = rb;
        }
        let mut groups: BTreeMap<usize, BTreeSet<TimeVar>> = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().insert(*v);
        }
        groups.into_values().collect()
    }

    /// True when every variable of the product lies in one connected component.
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// True when some component touches neither external insertion time.
    pub fn has_vacuum_component(&self) -> bool {
        self.components()
            .iter()
            .any(|c| !c.contains(&TimeVar::Tau1) && !c.contains(&TimeVar::Tau2))
    }

    /// Graphviz rendering, one node per time variable and one edge per propagator.
    pub fn to_dot(&self, name: &str, label: &str) -> String {
        let mut out = format!("graph {name} {{\n  label=\"{label}\";\n");
        for v in self.vars() {
            let shape = if v.is_vertex() { "point" } else { "circle" };
            out.push_str(&format!("  \"{v}\" [shape={shape}, xlabel=\"{v}\"];\n"));
        }
        for &(a, b) in &self.0 {
            out.push_str(&format!("  \"{a}\" -- \"{b}\" [label=\"D({a},{b})\"];\n"));
        }
        out.push_str("}\n");
        out
    }
}

fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let mut i = 0;
        let mut first = true;
        while i < self.0.len() {
            let e = self.0[i];
            let run = self.0[i..].iter().take_while(|x| **x == e).count();
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "D({},{})", e.0, e.1)?;
            if run > 1 {
                write!(f, "^{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Exact linear combination of propagator products.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropagatorSum {
    terms: BTreeMap<Pattern, ScalarSeries>,
}

impl PropagatorSum {
    pub fn zero() -> Self {
        PropagatorSum::default()
    }

    pub fn one() -> Self {
        PropagatorSum::single(Pattern::default(), ScalarSeries::one())
    }

    pub fn single(pattern: Pattern, coeff: ScalarSeries) -> Self {
        let mut s = PropagatorSum::zero();
        s.add_term(pattern, coeff);
        s
    }

    pub fn add_term(&mut self, pattern: Pattern, coeff: ScalarSeries) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(pattern.clone()).or_default();
        *slot += &coeff;
        if slot.is_zero() {
            self.terms.remove(&pattern);
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

    pub fn terms(&self) -> impl Iterator<Item = (&Pattern, &ScalarSeries)> {
        self.terms.iter()
    }

    pub fn scale(&self, c: &ScalarSeries) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (p, v) in &self.terms {
            out.add_term(p.clone(), v * c);
        }
        out
    }

    pub fn add(&self, other: &PropagatorSum) -> PropagatorSum {
        let mut out = self.clone();
        for (p, v) in &other.terms {
            out.add_term(p.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &PropagatorSum) -> PropagatorSum {
        let mut out = self.clone();
        for (p, v) in &other.terms {
            out.add_term(p.clone(), -v);
        }
        out
    }

    /// Product treating every time variable as a fixed label.
    pub fn mul(&self, other: &PropagatorSum) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                out.add_term(pa.product(pb), ca * cb);
            }
        }
        out
    }

    /// Product in which interaction vertices are dummy integration variables:
    /// the vertices of `other` are renamed apart from those of `self`, the
    /// result is canonicalized, and terms above `λ^max_order` are dropped.
    pub fn mul_integrated(&self, other: &PropagatorSum, max_order: u32) -> PropagatorSum {
        let offset = self.max_vertex();
        let mut out = PropagatorSum::zero();
        for (pb, cb) in &other.terms {
            let shifted = pb.relabel(|v| match v {
                TimeVar::Vertex(n) => TimeVar::Vertex(n + offset),
                o => o,
            });
            for (pa, ca) in &self.terms {
                let c = ca.mul_truncated(cb, max_order);
                out.add_term(pa.product(&shifted).canonical(), c);
            }
        }
        out
    }

    fn max_vertex(&self) -> u32 {
        self.terms.keys().filter_map(|p| p.vertices().into_iter().max()).max().unwrap_or(0)
    }

    /// Canonicalizes interaction-vertex labels of every term and merges.
    pub fn canonicalized(&self) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (p, c) in &self.terms {
            out.add_term(p.canonical(), c.clone());
        }
        out
    }

    pub fn truncate_lambda(&self, order: u32) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (p, c) in &self.terms {
            out.add_term(p.clone(), c.truncate_lambda(order));
        }
        out
    }

    /// Terms multiplying exactly `λ^order`, with the λ power stripped.
    pub fn lambda_part(&self, order: u32) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (p, c) in &self.terms {
            out.add_term(p.clone(), c.lambda_coefficient(order));
        }
        out
    }

    /// Renames `Tau1 <-> Tau2`.
    pub fn swap_taus(&self) -> PropagatorSum {
        let mut out = PropagatorSum::zero();
        for (p, c) in &self.terms {
            let q = p.relabel(|v| match v {
                TimeVar::Tau1 => TimeVar::Tau2,
                TimeVar::Tau2 => TimeVar::Tau1,
                o => o,
            });
            out.add_term(q, c.clone());
        }
        out
    }
}

/// One line per term: `coefficient * pattern`.
impl fmt::Display for PropagatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return writeln!(f, "0");
        }
        for (p, c) in &self.terms {
            if c.len() > 1 {
                writeln!(f, "({c}) * {p}")?;
            } else {
                writeln!(f, "{c} * {p}")?;
            }
        }
        Ok(())
    }
}

/// A class of Wick pairings sharing one edge multiset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WickDiagram {
    pub edges: Vec<Edge>,
    pub mean_legs: Vec<TimeVar>,
    pub multiplicity: u64,
}

impl WickDiagram {
    pub fn pattern(&self) -> Pattern {
        Pattern::new(self.edges.clone())
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut dot = self.pattern().to_dot(name, &format!("x{}", self.multiplicity));
        if !self.mean_legs.is_empty() {
            dot.truncate(dot.len() - 2);
            for (i, v) in self.mean_legs.iter().enumerate() {
                dot.push_str(&format!(
                    "  \"mean{i}\" [shape=box, label=\"-J/a\"];\n  \"{v}\" -- \"mean{i}\";\n"
                ));
            }
            dot.push_str("}\n");
        }
        dot
    }
}

/// Gaussian reference measure of the free oscillator, optionally shifted by a
/// constant source `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GaussianModel {
    pub source: bool,
}

impl GaussianModel {
    pub fn free() -> Self {
        GaussianModel { source: false }
    }

    pub fn with_source() -> Self {
        GaussianModel { source: true }
    }

    /// `<q> = -J ∫ds D(s,t) = -J/α`, or zero without a source.
    pub fn mean_value(&self) -> ScalarSeries {
        if self.source {
            ScalarSeries::monomial(rat(-1, 1), -2, 0, 1)
        } else {
            ScalarSeries::zero()
        }
    }
}

/// Pairing class over node indices (points of the input sequence).
#[derive(Debug, Clone)]
pub(crate) struct NodeDiagram {
    /// `(i, j, count)` with `i <= j`.
    pub pairs: Vec<(usize, usize, u32)>,
    pub mean: Vec<u32>,
    pub multiplicity: u128,
}

fn factorial(n: u32) -> u128 {
    (1..=u128::from(n)).product()
}

pub(crate) fn node_diagrams(degrees: &[u32], with_mean: bool) -> Vec<NodeDiagram> {
    let mut out = Vec::new();
    let mut mean = vec![0u32; degrees.len()];
    fn choose_mean(
        idx: usize,
        degrees: &[u32],
        with_mean: bool,
        mean: &mut Vec<u32>,
        out: &mut Vec<NodeDiagram>,
    ) {
        if idx == degrees.len() {
            let remaining: Vec<u32> = degrees.iter().zip(mean.iter()).map(|(d, m)| d - m).collect();
            if remaining.iter().sum::<u32>() % 2 == 1 {
                return;
            }
            let mut pairs = Vec::new();
            pair_nodes(remaining, 0, &mut pairs, degrees, mean, out);
            return;
        }
        let top = if with_mean { degrees[idx] } else { 0 };
        for m in 0..=top {
            mean[idx] = m;
            choose_mean(idx + 1, degrees, with_mean, mean, out);
        }
        mean[idx] = 0;
    }
    choose_mean(0, degrees, with_mean, &mut mean, &mut out);
    out
}

fn pair_nodes(
    mut remaining: Vec<u32>,
    start: usize,
    pairs: &mut Vec<(usize, usize, u32)>,
    degrees: &[u32],
    mean: &[u32],
    out: &mut Vec<NodeDiagram>,
) {
    let Some(i) = (start..remaining.len()).find(|&i| remaining[i] > 0) else {
        let mut num: u128 = degrees.iter().map(|&d| factorial(d)).product();
        let mut den: u128 = mean.iter().map(|&m| factorial(m)).product();
        for &(a, b, c) in pairs.iter() {
            den *= factorial(c);
            if a == b {
                den *= 1u128 << c;
            }
        }
        debug_assert_eq!(num % den, 0);
        num /= den;
        out.push(NodeDiagram { pairs: pairs.clone(), mean: mean.to_vec(), multiplicity: num });
        return;
    };
    let d = remaining[i];
    remaining[i] = 0;
    for loops in 0..=d / 2 {
        let rest = d - 2 * loops;
        let before = pairs.len();
        if loops > 0 {
            pairs.push((i, i, loops));
        }
        distribute(&mut remaining, i, i + 1, rest, pairs, degrees, mean, out);
        pairs.truncate(before);
    }
}

#[allow(clippy::too_many_arguments)]
fn distribute(
    remaining: &mut Vec<u32>,
    i: usize,
    j: usize,
    left: u32,
    pairs: &mut Vec<(usize, usize, u32)>,
    degrees: &[u32],
    mean: &[u32],
    out: &mut Vec<NodeDiagram>,
) {
    if left == 0 {
        pair_nodes(remaining.clone(), i + 1, pairs, degrees, mean, out);
        return;
    }
    if j >= remaining.len() {
        return;
    }
    let cap = left.min(remaining[j]);
    for c in (0..=cap).rev() {
        remaining[j] -= c;
        if c > 0 {
            pairs.push((i, j, c));
        }
        distribute(remaining, i, j + 1, left - c, pairs, degrees, mean, out);
        if c > 0 {
            pairs.pop();
        }
        remaining[j] += c;
    }
}

fn to_wick(points: &[InsertionPoint], d: &NodeDiagram) -> WickDiagram {
    let mut edges = Vec::new();
    for &(a, b, c) in &d.pairs {
        for _ in 0..c {
            edges.push(edge(points[a].time_var, points[b].time_var));
        }
    }
    edges.sort();
    let mut mean_legs = Vec::new();
    for (i, &m) in d.mean.iter().enumerate() {
        for _ in 0..m {
            mean_legs.push(points[i].time_var);
        }
    }
    mean_legs.sort();
    WickDiagram {
        edges,
        mean_legs,
        multiplicity: u64::try_from(d.multiplicity).expect("pairing multiplicity overflows u64"),
    }
}

fn merge_diagrams(diagrams: impl IntoIterator<Item = WickDiagram>) -> Vec<WickDiagram> {
    let mut merged: BTreeMap<(Vec<Edge>, Vec<TimeVar>), u64> = BTreeMap::new();
    for d in diagrams {
        *merged.entry((d.edges, d.mean_legs)).or_insert(0) += d.multiplicity;
    }
    merged
        .into_iter()
        .map(|((edges, mean_legs), multiplicity)| WickDiagram { edges, mean_legs, multiplicity })
        .collect()
}

/// All pairing classes of the product of `points`; with `with_mean` any subset
/// of legs may attach to the one-point function instead of a propagator.
/// An odd number of legs without a mean gives no diagrams.
pub fn enumerate_pairings(points: &[InsertionPoint], with_mean: bool) -> Vec<WickDiagram> {
    let degrees: Vec<u32> = points.iter().map(|p| p.power).collect();
    merge_diagrams(node_diagrams(&degrees, with_mean).iter().map(|d| to_wick(points, d)))
}

fn diagram_value(d: &WickDiagram) -> (Pattern, ScalarSeries) {
    let m = d.mean_legs.len() as u32;
    let mut coeff = ScalarSeries::constant(Rational::from_integer(BigInt::from(d.multiplicity)));
    if m > 0 {
        let sign = if m.is_multiple_of(2) { 1 } else { -1 };
        coeff = coeff.scale(&rat(sign, 1));
        coeff = &coeff * &ScalarSeries::monomial(Rational::one(), -2 * m as i32, 0, m);
    }
    (d.pattern(), coeff)
}

/// Gaussian moment of the product of `points` as a sum of propagator products.
pub fn moment(model: &GaussianModel, points: &[InsertionPoint]) -> PropagatorSum {
    let mut out = PropagatorSum::zero();
    for d in enumerate_pairings(points, model.source) {
        let (p, c) = diagram_value(&d);
        out.add_term(p, c);
    }
    out
}

/// `<A B> - <A><B>` by explicit subtraction.
pub fn connected_pair_correlator(
    model: &GaussianModel,
    a: &[InsertionPoint],
    b: &[InsertionPoint],
) -> PropagatorSum {
    let union: Vec<InsertionPoint> = a.iter().chain(b.iter()).copied().collect();
    moment(model, &union).sub(&moment(model, a).mul(&moment(model, b)))
}

/// `<A B> - <A><B>` by keeping only pairings with at least one propagator
/// joining the two clusters.
pub fn linked_pair_correlator(
    model: &GaussianModel,
    a: &[InsertionPoint],
    b: &[InsertionPoint],
) -> PropagatorSum {
    let union: Vec<InsertionPoint> = a.iter().chain(b.iter()).copied().collect();
    let degrees: Vec<u32> = union.iter().map(|p| p.power).collect();
    let split = a.len();
    let mut out = PropagatorSum::zero();
    for nd in node_diagrams(&degrees, model.source) {
        let links = nd.pairs.iter().any(|&(i, j, _)| (i < split) != (j < split));
        if links {
            let (p, c) = diagram_value(&to_wick(&union, &nd));
            out.add_term(p, c);
        }
    }
    out
}
