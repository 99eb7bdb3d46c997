//! Numerical reference: exact diagonalisation in a truncated oscillator basis
//! and finite-difference metrics of the ground state.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::perturbation::{Parameter, PolynomialPotential};
use crate::scalar::rational_to_f64;

pub const MAX_POTENTIAL_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("basis of size {size} too small: ground-state weight {tail_weight:e} in its top 10%")]
    BasisTooSmall { size: usize, tail_weight: f64 },
    #[error("finite-difference step too large for ({a}, {b}): halving changed the entry by {relative_change:.3}")]
    StepTooLarge { a: Parameter, b: Parameter, relative_change: f64 },
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Overlaps of central-difference eigenvector derivatives.
    #[default]
    Derivative,
    /// `2(1 - F)/δ²` from ground-state fidelities.
    Fidelity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub basis_size: usize,
    /// Frequency of the number basis; `√α` when unset.
    pub reference_frequency: Option<f64>,
    /// Relative step scale; the step for α is `scale·α`, for λ `scale·α^{3/2}`
    /// and for J `scale·α^{3/4}`.
    pub fd_scale: f64,
    /// Explicit per-parameter steps overriding the scaled defaults.
    pub fd_steps: Vec<(Parameter, f64)>,
    pub eigen_tolerance: f64,
    pub estimator: Estimator,
    /// Repeat the computation at twice the basis size and report the drift.
    pub check_basis: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            basis_size: 128,
            reference_frequency: None,
            fd_scale: 1e-4,
            fd_steps: Vec::new(),
            eigen_tolerance: 1e-12,
            estimator: Estimator::Derivative,
            check_basis: false,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.basis_size < 16 || self.basis_size > 1024 {
            return Err(OracleError::InvalidConfig(format!("basis size {} outside [16, 1024]", self.basis_size)));
        }
        if let Some(w) = self.reference_frequency {
            if !(w > 0.0 && w.is_finite()) {
                return Err(OracleError::InvalidConfig(format!("reference frequency {w} must be positive")));
            }
        }
        let steps = std::iter::once(self.fd_scale).chain(self.fd_steps.iter().map(|(_, h)| *h));
        for h in steps {
            if !(h > 0.0 && h.is_finite() && h < 0.1) {
                return Err(OracleError::InvalidConfig(format!("finite-difference step {h} must be in (0, 0.1)")));
            }
        }
        if !(self.eigen_tolerance > 0.0) {
            return Err(OracleError::InvalidConfig("eigen tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn step(&self, p: Parameter, alpha: f64) -> f64 {
        if let Some((_, h)) = self.fd_steps.iter().find(|(q, _)| *q == p) {
            return *h;
        }
        self.fd_scale
            * match p {
                Parameter::Alpha => alpha,
                Parameter::Lambda => alpha.powf(1.5),
                Parameter::J => alpha.powf(0.75),
            }
    }
}

/// Number basis of an oscillator with frequency `ω`, holding `q^k` for
/// `k <= max_power` restricted to the first `size` states.
#[derive(Debug, Clone)]
pub struct OscillatorBasis {
    pub size: usize,
    pub omega: f64,
    powers: Vec<DMatrix<f64>>,
}

impl OscillatorBasis {
    pub fn new(size: usize, omega: f64, max_power: u32) -> Self {
        // products are formed in a padded space so the kept block is exact
        let big = size + max_power as usize;
        let mut q = DMatrix::zeros(big, big);
        for n in 0..big - 1 {
            let v = ((n + 1) as f64 / (2.0 * omega)).sqrt();
            q[(n, n + 1)] = v;
            q[(n + 1, n)] = v;
        }
        let mut full = vec![DMatrix::identity(big, big)];
        for k in 1..=max_power as usize {
            full.push(&full[k - 1] * &q);
        }
        let powers = full.into_iter().map(|m| m.view((0, 0), (size, size)).into_owned()).collect();
        OscillatorBasis { size, omega, powers }
    }

    pub fn q_power(&self, k: u32) -> &DMatrix<f64> {
        &self.powers[k as usize]
    }

    /// `p²/2 + α q²/2 + J q + λ V(q)`.
    pub fn hamiltonian(&self, alpha: f64, lambda: f64, j: f64, potential: Option<&PolynomialPotential>) -> DMatrix<f64> {
        let w = self.omega;
        let mut h = self.q_power(2) * (0.5 * (alpha - w * w)) + self.q_power(1) * j;
        for n in 0..self.size {
            h[(n, n)] += w * (n as f64 + 0.5);
        }
        if let Some(pot) = potential {
            for (k, c) in pot.coefficients() {
                h += self.q_power(*k) * (lambda * rational_to_f64(c));
            }
        }
        h
    }
}

fn potential_degree(potential: Option<&PolynomialPotential>) -> Result<u32, OracleError> {
    let d = potential.map_or(2, |p| p.degree().max(2));
    if d > MAX_POTENTIAL_DEGREE {
        return Err(OracleError::InvalidConfig(format!("potential degree {d} exceeds {MAX_POTENTIAL_DEGREE}")));
    }
    Ok(d)
}

fn check_alpha(alpha: f64) -> Result<(), OracleError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidConfig(format!("alpha must be positive, got {alpha}")))
    }
}

pub fn build_hamiltonian(
    alpha: f64,
    lambda: f64,
    j: f64,
    potential: Option<&PolynomialPotential>,
    config: &OracleConfig,
) -> Result<DMatrix<f64>, OracleError> {
    config.validate()?;
    check_alpha(alpha)?;
    let degree = potential_degree(potential)?;
    let omega = config.reference_frequency.unwrap_or_else(|| alpha.sqrt());
    Ok(OscillatorBasis::new(config.basis_size, omega, degree).hamiltonian(alpha, lambda, j, potential))
}

/// Flips the sign so the largest-magnitude entry is positive.
pub fn gauge_fix(mut v: DVector<f64>) -> DVector<f64> {
    let (i, _) = v.iter().enumerate().fold((0, 0.0f64), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
    if v[i] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Lowest eigenpair of a symmetric matrix, normalised and gauge fixed.
pub fn ground_state(matrix: &DMatrix<f64>, tolerance: f64) -> Result<(f64, DVector<f64>), OracleError> {
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100_000)
        .ok_or(OracleError::NoConvergence { residual: f64::INFINITY })?;
    let (idx, energy) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, be), (i, e)| if e < be { (i, e) } else { (bi, be) });
    let v = eig.eigenvectors.column(idx).normalize();
    let residual = (matrix * &v - &v * energy).norm();
    let scale = matrix.abs().row_sum().max().max(1.0);
    if !residual.is_finite() || residual > tolerance * scale {
        return Err(OracleError::NoConvergence { residual });
    }
    Ok((energy, gauge_fix(v)))
}

/// Weight of the vector in the top 10% of the basis.
pub fn tail_weight(v: &DVector<f64>) -> f64 {
    let n = v.len();
    let start = n - n.div_ceil(10);
    v.rows(start, n - start).norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterPoint {
    pub alpha: f64,
    pub lambda: f64,
    pub j: f64,
}

impl ParameterPoint {
    fn shifted(mut self, p: Parameter, d: f64) -> Self {
        match p {
            Parameter::Alpha => self.alpha += d,
            Parameter::Lambda => self.lambda += d,
            Parameter::J => self.j += d,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericQgt {
    pub labels: Vec<Parameter>,
    pub metric: Vec<Vec<f64>>,
    /// `|g(h) - g(h/2)|` per entry.
    pub step_error: Vec<Vec<f64>>,
    /// `|g(2N) - g(N)|` per entry when basis checking is on.
    pub basis_drift: Option<Vec<Vec<f64>>>,
    pub ground_energy: f64,
    pub tail_weight: f64,
    pub estimator: Estimator,
}

impl NumericQgt {
    pub fn get(&self, a: Parameter, b: Parameter) -> Option<f64> {
        let i = self.labels.iter().position(|p| *p == a)?;
        let j = self.labels.iter().position(|p| *p == b)?;
        Some(self.metric[i][j])
    }

    pub fn error(&self, a: Parameter, b: Parameter) -> Option<f64> {
        let i = self.labels.iter().position(|p| *p == a)?;
        let j = self.labels.iter().position(|p| *p == b)?;
        let drift = self.basis_drift.as_ref().map_or(0.0, |d| d[i][j]);
        Some(self.step_error[i][j] + drift)
    }
}

struct Evaluator<'a> {
    basis: OscillatorBasis,
    potential: Option<&'a PolynomialPotential>,
    tolerance: f64,
}

impl Evaluator<'_> {
    fn state(&self, p: ParameterPoint) -> Result<(f64, DVector<f64>), OracleError> {
        ground_state(&self.basis.hamiltonian(p.alpha, p.lambda, p.j, self.potential), self.tolerance)
    }

    fn aligned(&self, p: ParameterPoint, reference: &DVector<f64>) -> Result<DVector<f64>, OracleError> {
        let (_, v) = self.state(p)?;
        Ok(if v.dot(reference) < 0.0 { -v } else { v })
    }

    fn derivative_metric(&self, p: ParameterPoint, psi: &DVector<f64>, labels: &[Parameter], steps: &[f64]) -> Result<Vec<Vec<f64>>, OracleError> {
        let mut d = Vec::with_capacity(labels.len());
        for (l, h) in labels.iter().zip(steps) {
            let plus = self.aligned(p.shifted(*l, *h), psi)?;
            let minus = self.aligned(p.shifted(*l, -*h), psi)?;
            d.push((plus - minus) / (2.0 * h));
        }
        let n = labels.len();
        let mut g = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                g[a][b] = d[a].dot(&d[b]) - d[a].dot(psi) * psi.dot(&d[b]);
            }
        }
        Ok(g)
    }

    fn fidelity_metric(&self, p: ParameterPoint, psi: &DVector<f64>, labels: &[Parameter], steps: &[f64]) -> Result<Vec<Vec<f64>>, OracleError> {
        // symmetric average of the two one-sided fidelities cancels odd orders
        let directional = |dir: &[(Parameter, f64)]| -> Result<f64, OracleError> {
            let mut total = 0.0;
            for sign in [1.0, -1.0] {
                let q = dir.iter().fold(p, |acc, (l, h)| acc.shifted(*l, sign * h));
                let (_, v) = self.state(q)?;
                total += 1.0 - v.dot(psi).abs();
            }
            Ok(total)
        };
        let n = labels.len();
        let mut diag = vec![0.0; n];
        for a in 0..n {
            diag[a] = directional(&[(labels[a], steps[a])])? / (steps[a] * steps[a]);
        }
        let mut g = vec![vec![0.0; n]; n];
        for a in 0..n {
            g[a][a] = diag[a];
            for b in a + 1..n {
                let both = directional(&[(labels[a], steps[a]), (labels[b], steps[b])])? / (steps[a] * steps[b]);
                let ab = 0.5 * (both - diag[a] * steps[a] / steps[b] - diag[b] * steps[b] / steps[a]);
                g[a][b] = ab;
                g[b][a] = ab;
            }
        }
        Ok(g)
    }

    fn metric(&self, p: ParameterPoint, psi: &DVector<f64>, labels: &[Parameter], steps: &[f64], estimator: Estimator) -> Result<Vec<Vec<f64>>, OracleError> {
        match estimator {
            Estimator::Derivative => self.derivative_metric(p, psi, labels, steps),
            Estimator::Fidelity => self.fidelity_metric(p, psi, labels, steps),
        }
    }
}

fn abs_diff(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter().zip(y).map(|(r, s)| r.iter().zip(s).map(|(a, b)| (a - b).abs()).collect()).collect()
}

/// Ground-state metric at `(α, λ, J)` over `labels`.
pub fn numeric_qim(
    point: ParameterPoint,
    potential: Option<&PolynomialPotential>,
    labels: &[Parameter],
    config: &OracleConfig,
) -> Result<NumericQgt, OracleError> {
    config.validate()?;
    check_alpha(point.alpha)?;
    if labels.contains(&Parameter::Lambda) && potential.is_none() {
        return Err(OracleError::InvalidConfig("λ derivative requested without a potential".into()));
    }
    let degree = potential_degree(potential)?;
    let omega = config.reference_frequency.unwrap_or_else(|| point.alpha.sqrt());
    let steps: Vec<f64> = labels.iter().map(|l| config.step(*l, point.alpha)).collect();
    let step_scale = if config.estimator == Estimator::Fidelity { 10.0 } else { 1.0 };
    let steps: Vec<f64> = steps.iter().map(|h| h * step_scale).collect();
    if labels.contains(&Parameter::Alpha) && point.alpha - steps[labels.iter().position(|l| *l == Parameter::Alpha).unwrap()] <= 0.0 {
        return Err(OracleError::InvalidConfig("α step reaches α <= 0".into()));
    }

    let run = |size: usize| -> Result<(f64, f64, Vec<Vec<f64>>, Vec<Vec<f64>>), OracleError> {
        let ev = Evaluator { basis: OscillatorBasis::new(size, omega, degree), potential, tolerance: config.eigen_tolerance };
        let (energy, psi) = ev.state(point)?;
        let tail = tail_weight(&psi);
        if tail > 1e-10 {
            return Err(OracleError::BasisTooSmall { size, tail_weight: tail });
        }
        let coarse = ev.metric(point, &psi, labels, &steps, config.estimator)?;
        let half: Vec<f64> = steps.iter().map(|h| h / 2.0).collect();
        let fine = ev.metric(point, &psi, labels, &half, config.estimator)?;
        Ok((energy, tail, coarse, fine))
    };

    let (energy, tail, coarse, fine) = run(config.basis_size)?;
    let n = labels.len();
    let scale = fine.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0f64, f64::max);
    for a in 0..n {
        for b in 0..n {
            let change = (coarse[a][b] - fine[a][b]).abs();
            let rel = change / fine[a][b].abs().max(1e-6 * scale).max(1e-12);
            if rel > 0.1 {
                return Err(OracleError::StepTooLarge { a: labels[a], b: labels[b], relative_change: rel });
            }
        }
    }
    // second-order differences: extrapolate away the h² term
    let metric: Vec<Vec<f64>> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| c.iter().zip(f).map(|(x, y)| (4.0 * y - x) / 3.0).collect())
        .collect();
    let step_error = abs_diff(&coarse, &fine);
    let basis_drift = if config.check_basis {
        let (_, _, c2, f2) = run(2 * config.basis_size)?;
        let m2: Vec<Vec<f64>> =
            c2.iter().zip(&f2).map(|(c, f)| c.iter().zip(f).map(|(x, y)| (4.0 * y - x) / 3.0).collect()).collect();
        Some(abs_diff(&metric, &m2))
    } else {
        None
    };
    Ok(NumericQgt {
        labels: labels.to_vec(),
        metric,
        step_error,
        basis_drift,
        ground_energy: energy,
        tail_weight: tail,
        estimator: config.estimator,
    })
}

/// Ground-state energy with the basis-size check applied.
pub fn ground_energy(point: ParameterPoint, potential: Option<&PolynomialPotential>, config: &OracleConfig) -> Result<f64, OracleError> {
    let h = build_hamiltonian(point.alpha, point.lambda, point.j, potential, config)?;
    let (e, v) = ground_state(&h, config.eigen_tolerance)?;
    let tail = tail_weight(&v);
    if tail > 1e-10 {
        return Err(OracleError::BasisTooSmall { size: config.basis_size, tail_weight: tail });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Parameter::*;

    fn pt(alpha: f64, lambda: f64, j: f64) -> ParameterPoint {
        ParameterPoint { alpha, lambda, j }
    }

    #[test]
    fn trivial_eigenproblems() {
        let (e, v) = ground_state(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])), 1e-12).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
        assert!((v[0] - 1.0).abs() < 1e-15);
        let (e, v) = ground_state(&DMatrix::identity(4, 4), 1e-12).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(v.iter().any(|x| (*x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn oscillator_energies() {
        let cfg = OracleConfig::default();
        assert!((ground_energy(pt(1.0, 0.0, 0.0), None, &cfg).unwrap() - 0.5).abs() < 1e-12);
        assert!((ground_energy(pt(1.0, 0.0, 0.5), None, &cfg).unwrap() - 0.375).abs() < 1e-10);
        let quartic = PolynomialPotential::quartic();
        let e = ground_energy(pt(1.0, 0.1, 0.0), Some(&quartic), &cfg).unwrap();
        assert!((e - 0.503125).abs() < 1e-3 && e < 0.503125);
        let big = OracleConfig { basis_size: 256, ..cfg };
        assert!((ground_energy(pt(1.0, 0.1, 0.0), Some(&quartic), &big).unwrap() - e).abs() < 1e-10);
    }

    #[test]
    fn frequency_independence() {
        let quartic = PolynomialPotential::quartic();
        let base = ground_energy(pt(1.0, 0.1, 0.0), Some(&quartic), &OracleConfig::default()).unwrap();
        let other = OracleConfig { reference_frequency: Some(1.3), ..OracleConfig::default() };
        assert!((ground_energy(pt(1.0, 0.1, 0.0), Some(&quartic), &other).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn padded_powers_are_exact() {
        let b = OscillatorBasis::new(16, 1.0, 4);
        // <n|q^4|n> = (6n² + 6n + 3)/4 at ω = 1
        for n in 0..16 {
            let nf = n as f64;
            assert!((b.q_power(4)[(n, n)] - (6.0 * nf * nf + 6.0 * nf + 3.0) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_fixing() {
        let v = DVector::from_vec(vec![0.1, -0.9, 0.3]);
        assert_eq!(gauge_fix(v.clone()), gauge_fix(-v.clone()));
        assert!(gauge_fix(v)[1] > 0.0);
    }

    #[test]
    fn small_basis_is_rejected() {
        let cfg = OracleConfig { basis_size: 16, reference_frequency: Some(0.2), ..OracleConfig::default() };
        let err = ground_energy(pt(4.0, 0.0, 3.0), None, &cfg).unwrap_err();
        assert!(matches!(err, OracleError::BasisTooSmall { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig { basis_size: 8, ..OracleConfig::default() }.validate().is_err());
        assert!(OracleConfig { fd_scale: -1.0, ..OracleConfig::default() }.validate().is_err());
        assert!(numeric_qim(pt(1.0, 0.0, 0.0), None, &[Lambda], &OracleConfig::default()).is_err());
        assert!(numeric_qim(pt(0.0, 0.0, 0.0), None, &[Alpha], &OracleConfig::default()).is_err());
        let p9 = PolynomialPotential::monomial(9);
        assert!(numeric_qim(pt(1.0, 0.0, 0.0), Some(&p9), &[Alpha], &OracleConfig::default()).is_err());
    }

    #[test]
    fn free_metric() {
        let g = numeric_qim(pt(1.0, 0.0, 0.0), None, &[Alpha, J], &OracleConfig::default()).unwrap();
        assert!((g.get(J, J).unwrap() - 0.5).abs() < 1e-6);
        assert!((g.get(Alpha, Alpha).unwrap() - 0.03125).abs() < 1e-6);
        assert!(g.get(Alpha, J).unwrap().abs() < 1e-6);
    }

    #[test]
    fn fidelity_estimator_agrees() {
        let quartic = PolynomialPotential::quartic();
        let p = pt(1.0, 0.05, 0.0);
        let d = numeric_qim(p, Some(&quartic), &[Alpha, Lambda], &OracleConfig::default()).unwrap();
        let cfg = OracleConfig { estimator: Estimator::Fidelity, ..OracleConfig::default() };
        let f = numeric_qim(p, Some(&quartic), &[Alpha, Lambda], &cfg).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let rel = (d.metric[a][b] - f.metric[a][b]).abs() / d.metric[a][b].abs();
                assert!(rel < 1e-4, "{a}{b}: {} vs {}", d.metric[a][b], f.metric[a][b]);
            }
        }
    }

    #[test]
    fn basis_doubling_drift() {
        let quartic = PolynomialPotential::quartic();
        let cfg = OracleConfig { check_basis: true, ..OracleConfig::default() };
        let g = numeric_qim(pt(1.0, 0.05, 0.0), Some(&quartic), &[Alpha, Lambda], &cfg).unwrap();
        let drift = g.basis_drift.unwrap();
        assert!(drift.iter().flatten().all(|d| *d < 1e-8), "{drift:?}");
        assert!(g.step_error.iter().flatten().all(|d| *d < 1e-7), "{:?}", g.step_error);
        assert!((g.metric[0][1] - g.metric[1][0]).abs() < 1e-12);
    }
}
