//! Maps between positive potentials `u`, velocity fields `H = -n ∇ log u`
//! and back.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{FlowError, Result};
use crate::fiber::{grad_log_with, integrate, Differentiation, ScalarField, VectorAlongFiber};

/// Relative circulation bound for a velocity field to count as a gradient on a circle.
pub const CIRCULATION_TOL: f64 = 1e-8;

/// `H = -n ∇ log u`.
pub fn velocity_from_potential_fn(u: &ScalarField, n: f64) -> Result<VectorAlongFiber> {
    velocity_from_potential_with(u, n, Differentiation::FiniteDifference)
}

pub fn velocity_from_potential_with(
    u: &ScalarField,
    n: f64,
    mode: Differentiation,
) -> Result<VectorAlongFiber> {
    grad_log_with(u, -n, mode)
}

/// Positive `u` with `-n ∇ log u = H`, gauge-fixed to `∫u = length`.
/// Spectral on a circle, where a smooth gradient has circulation at rounding level.
pub fn potential_from_velocity(h: &VectorAlongFiber, n: f64) -> Result<ScalarField> {
    potential_from_velocity_with(h, n, Differentiation::preferred(h.grid()))
}

/// As [`potential_from_velocity`]; `FiniteDifference` uses a trapezoid
/// antiderivative, `Fourier` a spectral one (circles only).
///
/// A finite-difference `u'/u` carries an `O(h²)` circulation, so in that mode
/// the circle check also admits `h² ∫|H|` and the mean of `H` is removed
/// before integrating.
pub fn potential_from_velocity_with(
    h: &VectorAlongFiber,
    n: f64,
    mode: Differentiation,
) -> Result<ScalarField> {
    if !(n.is_finite() && n > 0.0) {
        return Err(FlowError::InvalidInput(format!("n must be positive, got {n}")));
    }
    let grid = *h.grid();
    if grid.is_periodic() {
        let circulation = integrate(h.component());
        let mut tolerance = CIRCULATION_TOL * grid.length();
        if mode == Differentiation::FiniteDifference {
            let dx = grid.spacing();
            tolerance += dx * dx * integrate(&h.component().map(f64::abs)?);
        }
        if circulation.abs() > tolerance {
            return Err(FlowError::NotConservative {
                circulation,
                tolerance,
            });
        }
    }
    let log_u = match mode {
        Differentiation::FiniteDifference => {
            let dx = grid.spacing();
            let mean = if grid.is_periodic() {
                integrate(h.component()) / grid.length()
            } else {
                0.0
            };
            let vals: Vec<f64> = h.values().iter().map(|v| v - mean).collect();
            let mut acc = Vec::with_capacity(vals.len());
            let mut phi = 0.0;
            acc.push(phi);
            for w in vals.windows(2) {
                phi -= 0.5 * dx * (w[0] + w[1]) / n;
                acc.push(phi);
            }
            acc
        }
        Differentiation::Fourier => {
            if !grid.is_periodic() {
                return Err(FlowError::InvalidInput(
                    "Fourier antiderivative requires a circle".into(),
                ));
            }
            spectral_antiderivative(h.values(), grid.length(), -1.0 / n)
        }
    };
    // Shift by the maximum before exponentiating to stay clear of overflow.
    let top = log_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let u = ScalarField::new(grid, log_u.iter().map(|p| (p - top).exp()).collect())?;
    u.normalized_mean()
}

/// Zero-mean antiderivative of `scale · values` over a period.
fn spectral_antiderivative(values: &[f64], length: f64, scale: f64) -> Vec<f64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(scale * v, 0.0)).collect();
    fwd.process(&mut buf);
    let k0 = 2.0 * std::f64::consts::PI / length;
    for (j, c) in buf.iter_mut().enumerate() {
        if j == 0 || (n.is_multiple_of(2) && j == n / 2) {
            *c = Complex::new(0.0, 0.0);
            continue;
        }
        let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        *c /= Complex::new(0.0, k * k0);
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// `‖potential(velocity(u)) - u/mean(u)‖∞`, spectral on a circle.
pub fn roundtrip_residual(u: &ScalarField, n: f64) -> Result<f64> {
    roundtrip_residual_with(u, n, Differentiation::preferred(u.grid()))
}

pub fn roundtrip_residual_with(u: &ScalarField, n: f64, mode: Differentiation) -> Result<f64> {
    let h = velocity_from_potential_with(u, n, mode)?;
    let back = potential_from_velocity_with(&h, n, mode)?;
    back.sup_distance(&u.normalized_mean()?)
}
