use std::collections::BTreeMap;

use nalgebra::DVector;
use proptest::prelude::*;

use qgt_core::integrator::{propagator_value, resolve_absolute_values, wedge_vars, Integrator};
use qgt_core::linear_exact::{exact_linear_qgt, ShiftedGaussianState};
use qgt_core::perturbation::PolynomialPotential;
use qgt_core::scalar::ScalarSeries;
use qgt_core::qgt::{compute_qgt, ModelKind, Parameter, ParameterSpace, QgtOptions};
use qgt_core::spectral::{gauge_fix, numeric_qim, OracleConfig, ParameterPoint};
use qgt_core::time::TimeVar::{self, Tau1, Tau2, Vertex};
use qgt_core::wick::{connected_pair_correlator, edge, enumerate_pairings, moment, GaussianModel, InsertionPoint, Pattern};

fn odd_double_factorial(n: u64) -> u64 {
    (1..=n).map(|k| 2 * k - 1).product()
}

fn points(degrees: &[u32]) -> Vec<InsertionPoint> {
    degrees.iter().enumerate().map(|(i, &d)| InsertionPoint::new(Vertex(i as u32 + 1), d)).collect()
}

/// A connected multigraph on t1, t2 and `vertices` interaction vertices.
fn connected_pattern(vertices: u32) -> impl Strategy<Value = Pattern> {
    let nodes: Vec<TimeVar> = [Tau1, Tau2].into_iter().chain((1..=vertices).map(Vertex)).collect();
    let n = nodes.len();
    let tree = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
    let extra = proptest::collection::vec((0..n, 0..n), 0..4);
    (tree, extra).prop_map(move |(tree, extra)| {
        let mut edges = Vec::new();
        for (i, idx) in tree.iter().enumerate() {
            let child = i + 1;
            edges.push(edge(nodes[child], nodes[idx.index(child)]));
        }
        for (a, b) in extra {
            edges.push(edge(nodes[a], nodes[b]));
        }
        Pattern::new(edges)
    })
}

fn direct_value(p: &Pattern, alpha: f64, values: &BTreeMap<TimeVar, f64>) -> f64 {
    p.edges().iter().map(|(a, b)| propagator_value(alpha, values[a], values[b])).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairing_count(degrees in proptest::collection::vec(1u32..6, 1..5)) {
        let total: u32 = degrees.iter().sum();
        prop_assume!(total % 2 == 0 && total <= 12);
        let count: u64 = enumerate_pairings(&points(&degrees), false).iter().map(|d| d.multiplicity).sum();
        prop_assert_eq!(count, odd_double_factorial(u64::from(total / 2)));
    }

    #[test]
    fn odd_moments_vanish(degrees in proptest::collection::vec(1u32..6, 1..4)) {
        let total: u32 = degrees.iter().sum();
        prop_assume!(total % 2 == 1);
        prop_assert!(moment(&GaussianModel::free(), &points(&degrees)).is_zero());
    }

    #[test]
    fn correlator_swap_symmetry(a in 1u32..6, b in 1u32..6, source in any::<bool>()) {
        let model = GaussianModel { source };
        let ab = connected_pair_correlator(&model, &[InsertionPoint::new(Tau1, a)], &[InsertionPoint::new(Tau2, b)]);
        let ba = connected_pair_correlator(&model, &[InsertionPoint::new(Tau1, b)], &[InsertionPoint::new(Tau2, a)]);
        prop_assert_eq!(ab.swap_taus(), ba);
    }

    #[test]
    fn chamber_completeness(
        p in connected_pattern(1),
        alpha in 0.3f64..3.0,
        t1 in -3.0f64..-0.01,
        t2 in 0.01f64..3.0,
    ) {
        // integrating the vertex chamber by chamber equals quadrature of |.|
        let integrator = Integrator::new();
        let s = Vertex(1);
        let mut partial = 0.0;
        let values: BTreeMap<TimeVar, f64> = [(Tau1, t1), (Tau2, t2)].into_iter().collect();
        for term in resolve_absolute_values(&p, &wedge_vars(&p)) {
            for t in integrator.integrate_innermost(&term, s).unwrap() {
                if t.chamber.contains(&values) {
                    partial += t.eval(alpha, &values);
                }
            }
        }
        let f = |x: f64| {
            let mut v = values.clone();
            v.insert(s, x);
            direct_value(&p, alpha, &v)
        };
        let reach = 60.0 / alpha.sqrt();
        let mut numeric = 0.0;
        for (lo, hi) in [(t1 - reach, t1), (t1, 0.0), (0.0, t2), (t2, t2 + reach)] {
            numeric += quadrature::double_exponential::integrate(f, lo, hi, 1e-15).integral;
        }
        prop_assert!((partial - numeric).abs() <= 1e-8 * numeric.abs(), "{} vs {} for {}", partial, numeric, p);
    }

    #[test]
    fn scaling_law(p in connected_pattern(2)) {
        let value = Integrator::new().integrate_pattern(&p).unwrap();
        let expected = -((p.edges().len() + wedge_vars(&p).len()) as i32);
        prop_assert!(value.terms().all(|t| t.alpha_half_pow == expected), "{} -> {}", p, value);
    }

    #[test]
    fn fubini_two_vertices(p in connected_pattern(2), rot in 0usize..4) {
        let integrator = Integrator::new();
        let mut order = wedge_vars(&p);
        order.rotate_left(rot);
        prop_assert_eq!(integrator.integrate_pattern_in_order(&p, &order).unwrap(), integrator.integrate_pattern(&p).unwrap());
    }

    #[test]
    fn linear_pipeline_matches_closed_form(alpha in 0.2f64..5.0, j in -2.0f64..2.0) {
        let r = compute_qgt(&ParameterSpace::default_for(ModelKind::LinearSource), &QgtOptions::new(0)).unwrap();
        let num = r.metric.eval(alpha, 0.0, j).unwrap();
        let exact = exact_linear_qgt(alpha, j).unwrap().matrix();
        for a in 0..2 {
            for b in 0..2 {
                prop_assert!((num[a][b] - exact[a][b]).abs() <= 1e-12 * exact[a][b].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn gauge_fix_ignores_global_sign(v in proptest::collection::vec(-1.0f64..1.0, 2..20)) {
        let v = DVector::from_vec(v);
        prop_assume!(v.amax() > 0.0);
        prop_assert_eq!(gauge_fix(v.clone()), gauge_fix(-v));
    }

    #[test]
    fn series_metric_positive_below_half_critical(alpha in 0.5f64..2.0, frac in 0.0f64..0.5) {
        let r = compute_qgt(&ParameterSpace::default_for(ModelKind::Quartic), &QgtOptions::new(1)).unwrap();
        let lambda = frac * 16.0 / 35.0 * alpha.powf(1.5);
        let g = r.metric.eval(alpha, lambda, 0.0).unwrap();
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        prop_assert!(g[0][0] > 0.0 && det > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn oracle_metric_positive_at_small_coupling(alpha_idx in 0usize..3, frac in 0.0f64..0.5) {
        let alpha = [0.5, 1.0, 2.0][alpha_idx];
        let lambda = frac * 16.0 / 35.0 * f64::powf(alpha, 1.5);
        let quartic = PolynomialPotential::quartic();
        let point = ParameterPoint { alpha, lambda, j: 0.0 };
        let g = numeric_qim(point, Some(&quartic), &[Parameter::Alpha, Parameter::Lambda], &OracleConfig::default()).unwrap();
        let m = nalgebra::Matrix2::new(g.metric[0][0], g.metric[0][1], g.metric[1][0], g.metric[1][1]);
        prop_assert!(m.symmetric_eigenvalues().iter().all(|e| *e > 0.0));
    }
}

#[test]
fn shifted_gaussian_normalised() {
    for alpha in [0.5, 1.0, 4.0] {
        let s = ShiftedGaussianState::new(alpha, 0.7).unwrap();
        let c = s.center();
        let w = 12.0 / alpha.powf(0.25);
        let norm = quadrature::double_exponential::integrate(|q| s.amplitude(q).powi(2), c - w, c + w, 1e-14).integral;
        assert!((norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn quartic_free_limit_matches_linear() {
    let q = compute_qgt(&ParameterSpace::default_for(ModelKind::Quartic), &QgtOptions::new(0)).unwrap();
    let l = compute_qgt(&ParameterSpace::default_for(ModelKind::LinearSource), &QgtOptions::new(0)).unwrap();
    let qa = q.metric.get(Parameter::Alpha, Parameter::Alpha).unwrap();
    let la = l.metric.get(Parameter::Alpha, Parameter::Alpha).unwrap();
    assert_eq!(qa, &ScalarSeries::from_terms(la.terms().filter(|t| t.j_pow == 0)));
    assert_eq!(qa.to_string(), "1/32 * a^-2");
}

#[test]
fn second_order_improves_agreement() {
    // the λ² term reduces the oracle deviation from O(λ²) to O(λ³)
    let quartic = PolynomialPotential::quartic();
    let space = ParameterSpace::default_for(ModelKind::Quartic);
    let m1 = compute_qgt(&space, &QgtOptions::new(1)).unwrap().metric;
    let m2 = compute_qgt(&space, &QgtOptions::new(2)).unwrap().metric;
    let lambdas = [0.02, 0.04, 0.08];
    let mut dev2 = Vec::new();
    for &lambda in &lambdas {
        let point = ParameterPoint { alpha: 1.0, lambda, j: 0.0 };
        let n = numeric_qim(point, Some(&quartic), &space.labels().to_vec(), &OracleConfig::default()).unwrap();
        let s1 = m1.eval(1.0, lambda, 0.0).unwrap();
        let s2 = m2.eval(1.0, lambda, 0.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((n.metric[i][j] - s2[i][j]).abs() < (n.metric[i][j] - s1[i][j]).abs());
            }
        }
        dev2.push((n.metric[1][1] - s2[1][1]).abs());
    }
    let slope = (dev2[2] / dev2[0]).ln() / 4f64.ln();
    assert!((slope - 3.0).abs() < 0.3, "slope {slope}, {dev2:?}");
}
