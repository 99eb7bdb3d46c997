//! Closed-form results for the oscillator with a linear source, and a
//! quadrature check of them from the explicit ground-state wavefunction.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{rat, ScalarSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearExactError {
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("quadrature did not converge: error estimate {estimate:e} for {what}")]
    QuadratureFailure { what: String, estimate: f64 },
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Ground state of `p²/2 + α q²/2 + J q`: a Gaussian of width `α^{-1/4}`
/// centred at `-J/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedGaussianState {
    pub alpha: f64,
    pub j: f64,
}

impl ShiftedGaussianState {
    pub fn new(alpha: f64, j: f64) -> Result<Self, LinearExactError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(LinearExactError::NonPositiveAlpha(alpha));
        }
        Ok(ShiftedGaussianState { alpha, j })
    }

    pub fn center(&self) -> f64 {
        -self.j / self.alpha
    }

    pub fn amplitude(&self, q: f64) -> f64 {
        let w = self.alpha.sqrt();
        let x = q - self.center();
        (w / PI).powf(0.25) * (-0.5 * w * x * x).exp()
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.alpha.sqrt() - 0.5 * self.j * self.j / self.alpha
    }
}

/// Metric in the `(α, J)` coordinates. The connection vanishes for a real state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactLinearQgt {
    pub g_alpha_alpha: f64,
    pub g_alpha_j: f64,
    pub g_j_j: f64,
}

impl ExactLinearQgt {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.g_alpha_alpha, self.g_alpha_j], [self.g_alpha_j, self.g_j_j]]
    }

    pub fn determinant(&self) -> f64 {
        self.g_alpha_alpha * self.g_j_j - self.g_alpha_j * self.g_alpha_j
    }
}

pub fn exact_linear_qgt(alpha: f64, j: f64) -> Result<ExactLinearQgt, LinearExactError> {
    ShiftedGaussianState::new(alpha, j)?;
    Ok(ExactLinearQgt {
        g_alpha_alpha: 1.0 / (32.0 * alpha * alpha) + j * j / (2.0 * alpha.powf(3.5)),
        g_alpha_j: -j / (2.0 * alpha.powf(2.5)),
        g_j_j: 1.0 / (2.0 * alpha.powf(1.5)),
    })
}

/// The metric as exact series, rows and columns ordered `(α, J)`.
pub fn closed_form_series() -> [[ScalarSeries; 2]; 2] {
    let aa = ScalarSeries::monomial(rat(1, 32), -4, 0, 0) + ScalarSeries::monomial(rat(1, 2), -7, 0, 2);
    let aj = ScalarSeries::monomial(rat(-1, 2), -5, 0, 1);
    let jj = ScalarSeries::monomial(rat(1, 2), -3, 0, 0);
    [[aa, aj.clone()], [aj, jj]]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub numeric: [[f64; 2]; 2],
    pub closed_form: [[f64; 2]; 2],
    /// `<ψ|∂_a ψ>` for `a = α, J`.
    pub connections: [f64; 2],
    pub norm: f64,
    pub max_relative_deviation: f64,
}

fn integrate(what: &str, f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64, LinearExactError> {
    let out = quadrature::double_exponential::integrate(f, lo, hi, 1e-14);
    if !out.integral.is_finite() || out.error_estimate > 1e-8 + 1e-6 * out.integral.abs() {
        return Err(LinearExactError::QuadratureFailure { what: what.into(), estimate: out.error_estimate });
    }
    Ok(out.integral)
}

/// Computes `<∂_a ψ|∂_b ψ> - <∂_a ψ|ψ><ψ|∂_b ψ>` by quadrature, with the
/// parameter derivatives taken by central differences of relative size `step`.
pub fn overlap_derivative_checks(alpha: f64, j: f64, step: f64) -> Result<OverlapReport, LinearExactError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(LinearExactError::InvalidStep(step));
    }
    let state = ShiftedGaussianState::new(alpha, j)?;
    let h = [step * alpha, step * alpha.powf(0.75)];
    if alpha - h[0] <= 0.0 {
        return Err(LinearExactError::InvalidStep(step));
    }
    let shifted = |k: usize, s: f64| match k {
        0 => ShiftedGaussianState { alpha: alpha + s, j },
        _ => ShiftedGaussianState { alpha, j: j + s },
    };
    let deriv = |k: usize, q: f64| {
        (shifted(k, h[k]).amplitude(q) - shifted(k, -h[k]).amplitude(q)) / (2.0 * h[k])
    };
    let half_width = 12.0 / alpha.powf(0.25);
    let (lo, hi) = (state.center() - half_width, state.center() + half_width);

    let norm = integrate("norm", |q| state.amplitude(q).powi(2), lo, hi)?;
    let mut connections = [0.0; 2];
    for (k, c) in connections.iter_mut().enumerate() {
        *c = integrate("connection", |q| state.amplitude(q) * deriv(k, q), lo, hi)?;
    }
    let mut numeric = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            let overlap = integrate("derivative overlap", |q| deriv(a, q) * deriv(b, q), lo, hi)?;
            numeric[a][b] = overlap - connections[a] * connections[b];
            numeric[b][a] = numeric[a][b];
        }
    }
    let closed_form = exact_linear_qgt(alpha, j)?.matrix();
    let scale = closed_form.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut max_relative_deviation = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            let denom = closed_form[a][b].abs().max(1e-6 * scale);
            max_relative_deviation = max_relative_deviation.max((numeric[a][b] - closed_form[a][b]).abs() / denom);
        }
    }
    Ok(OverlapReport { numeric, closed_form, connections, norm, max_relative_deviation })
}
